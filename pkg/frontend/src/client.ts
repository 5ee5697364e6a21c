// Socket wiring around the pure model. Works with both the browser WebSocket
// and the node "ws" implementation; only the four handler properties and
// send/close are assumed.

import { ActionSender, UserAction } from "./actions";
import { UiModel, addNotice, applyRaw, initialModel, setConnection } from "./model";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type ModelListener = (model: UiModel) => void;

export class OperatorClient {
  model: UiModel = initialModel();

  private sender = new ActionSender();
  private listeners: ModelListener[] = [];

  constructor(private socket: SocketLike) {
    socket.onopen = () => {
      this.update(setConnection(this.model, "open"));
      this.sender.attach((data) => this.socket.send(data));
    };
    socket.onmessage = (ev) => {
      const text = typeof ev.data === "string" ? ev.data : String(ev.data);
      let raw: unknown;
      try {
        raw = JSON.parse(text);
      } catch {
        this.update(addNotice(this.model, "bad message: not JSON"));
        return;
      }
      this.update(applyRaw(this.model, raw));
    };
    socket.onclose = () => {
      this.sender.detach();
      this.update(setConnection(this.model, "closed"));
    };
    socket.onerror = () => {
      this.update(addNotice(this.model, "socket error"));
    };
  }

  perform(action: UserAction): void {
    const result = this.sender.send(action);
    if (result.notice !== null) {
      this.update(addNotice(this.model, result.notice));
    }
  }

  subscribe(listener: ModelListener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  close(): void {
    this.socket.close();
  }

  private update(model: UiModel): void {
    this.model = model;
    for (const listener of [...this.listeners]) {
      listener(model);
    }
  }
}
