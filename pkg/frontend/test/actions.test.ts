import { describe, expect, it } from "vitest";

import { ActionSender, QUEUE_LIMIT, actionToMessage } from "../src/actions";
import { OperatorClient } from "../src/client";
import { FakeSocket } from "./helpers";

describe("actionToMessage", () => {
  it("maps each action to its wire shape", () => {
    expect(actionToMessage({ kind: "utterance", text: "hi" })).toEqual({ type: "utterance", text: "hi" });
    expect(actionToMessage({ kind: "step_done" })).toEqual({ type: "step_done" });
    expect(actionToMessage({ kind: "declare_object", label: "mug" })).toEqual({
      type: "declare_object",
      label: "mug",
    });
    expect(actionToMessage({ kind: "palm_open", open: true })).toEqual({ type: "palm_open", open: true });
    expect(actionToMessage({ kind: "move_panel" })).toEqual({ type: "move_panel" });
  });
});

describe("ActionSender", () => {
  it("delivers straight through when attached", () => {
    const sent: string[] = [];
    const sender = new ActionSender();
    sender.attach((data) => sent.push(data));
    const result = sender.send({ kind: "step_done" });
    expect(result).toEqual({ delivered: true, queued: false, notice: null });
    expect(sent).toEqual(['{"type":"step_done"}']);
  });

  it("queues up to the limit while disconnected, then rejects with a notice", () => {
    const sender = new ActionSender();
    for (let i = 0; i < QUEUE_LIMIT; i++) {
      const result = sender.send({ kind: "utterance", text: `m${i}` });
      expect(result.queued).toBe(true);
    }
    const rejected = sender.send({ kind: "utterance", text: "one too many" });
    expect(rejected.delivered).toBe(false);
    expect(rejected.queued).toBe(false);
    expect(rejected.notice).toContain("queue full");
    expect(sender.queuedCount).toBe(QUEUE_LIMIT);
  });

  it("drains the queue in order on attach", () => {
    const sender = new ActionSender();
    sender.send({ kind: "utterance", text: "first" });
    sender.send({ kind: "step_done" });
    const sent: string[] = [];
    sender.attach((data) => sent.push(data));
    expect(sent.map((s) => JSON.parse(s).type)).toEqual(["utterance", "step_done"]);
    expect(sender.queuedCount).toBe(0);
  });
});

describe("OperatorClient", () => {
  it("queues before open, flushes on open, rejects past the limit visibly", () => {
    const socket = new FakeSocket();
    const client = new OperatorClient(socket);
    for (let i = 0; i < QUEUE_LIMIT + 2; i++) {
      client.perform({ kind: "utterance", text: `m${i}` });
    }
    expect(socket.sent).toEqual([]);
    expect(client.model.notices).toHaveLength(2);

    socket.open();
    expect(client.model.connection).toBe("open");
    expect(socket.sent).toHaveLength(QUEUE_LIMIT);

    client.perform({ kind: "step_done" });
    expect(socket.sent).toHaveLength(QUEUE_LIMIT + 1);
  });

  it("reduces inbound frames and notes close", () => {
    const socket = new FakeSocket();
    const client = new OperatorClient(socket);
    socket.open();
    socket.receive({ type: "command", time_ns: 1, command: { type: "show_suggestions", suggestions: ["hi"] } });
    expect(client.model.suggestions).toEqual(["hi"]);
    socket.receive("{{{");
    expect(client.model.notices).toEqual(["bad message: not JSON"]);
    socket.close();
    expect(client.model.connection).toBe("closed");
  });
});
