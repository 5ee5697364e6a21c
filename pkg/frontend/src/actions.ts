// Operator intent -> wire message. Buttons and keyboard paths both come
// through here, so scripted tests drive exactly what a click would send.

import { ClientMessage } from "./messages";

export type UserAction =
  | { kind: "utterance"; text: string }
  | { kind: "step_done" }
  | { kind: "declare_object"; label: string }
  | { kind: "palm_open"; open: boolean }
  | { kind: "move_panel" };

export function actionToMessage(action: UserAction): ClientMessage {
  switch (action.kind) {
    case "utterance":
      return { type: "utterance", text: action.text };
    case "step_done":
      return { type: "step_done" };
    case "declare_object":
      return { type: "declare_object", label: action.label };
    case "palm_open":
      return { type: "palm_open", open: action.open };
    case "move_panel":
      return { type: "move_panel" };
  }
}

export interface SendResult {
  delivered: boolean;
  queued: boolean;
  /** Set when the action was neither delivered nor queued. */
  notice: string | null;
}

export const QUEUE_LIMIT = 10;

/**
 * Delivery with a small offline buffer: while disconnected, up to QUEUE_LIMIT
 * actions wait for the socket; past that they are rejected with a notice.
 */
export class ActionSender {
  private transmit: ((data: string) => void) | null = null;
  private pending: ClientMessage[] = [];

  get queuedCount(): number {
    return this.pending.length;
  }

  /** Called when the socket opens; drains the offline queue in order. */
  attach(transmit: (data: string) => void): void {
    this.transmit = transmit;
    for (const msg of this.pending.splice(0)) {
      transmit(JSON.stringify(msg));
    }
  }

  detach(): void {
    this.transmit = null;
  }

  send(action: UserAction): SendResult {
    const msg = actionToMessage(action);
    if (this.transmit !== null) {
      this.transmit(JSON.stringify(msg));
      return { delivered: true, queued: false, notice: null };
    }
    if (this.pending.length < QUEUE_LIMIT) {
      this.pending.push(msg);
      return { delivered: false, queued: true, notice: null };
    }
    return {
      delivered: false,
      queued: false,
      notice: `not connected: dropped ${action.kind} (queue full)`,
    };
  }
}
