// Browser entry point. The bridge address defaults to the server's standard
// operator port; override with ?ws=ws://host:port/ws when serving elsewhere.

import { OperatorClient, SocketLike } from "./client";
import { render } from "./render";

const params = new URLSearchParams(window.location.search);
const url = params.get("ws") ?? `ws://${window.location.hostname || "127.0.0.1"}:7601/ws`;

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app container");
}

const client = new OperatorClient(new WebSocket(url) as unknown as SocketLike);
const redraw = () => render(root, client.model, (action) => client.perform(action));
client.subscribe(redraw);
redraw();
