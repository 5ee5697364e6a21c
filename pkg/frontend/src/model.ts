// The whole UI is a pure fold over received messages: no timers, no sockets,
// no hidden state. That keeps it order-deterministic and snapshot-testable.

import {
  Command,
  PanelCursor,
  PanelStep,
  parseServerMessage,
} from "./messages";

export type ConnectionState = "connecting" | "open" | "closed";

export interface ChatBubble {
  side: "assistant" | "user";
  text: string;
}

export interface TaskPanel {
  taskName: string;
  steps: PanelStep[];
  cursor: PanelCursor;
  gathered: string[];
}

export interface ObjectLabel {
  trackId: number;
  label: string;
  position: [number, number, number];
}

export interface Hologram {
  hologramId: string;
  kind: string;
  pose: number[];
  text: string | null;
  modelName: string | null;
}

export interface ActiveTimer {
  timerId: string;
  durationS: number;
  startedAtNs: number;
}

export interface UiModel {
  connection: ConnectionState;
  sessionId: string | null;
  phase: string | null;
  chat: ChatBubble[];
  suggestions: string[];
  panel: TaskPanel | null;
  objectLabels: ObjectLabel[];
  holograms: Hologram[];
  timers: ActiveTimer[];
  lastSpeak: { utteranceId: number; text: string } | null;
  panelMoves: number;
  lastTimeNs: number;
  commandCount: number;
  acks: number;
  /** Unknown command kinds land here as visible rows, never dropped silently. */
  diagnostics: string[];
  /** Schema violations, server errors, and delivery problems: the status bar. */
  notices: string[];
}

export function initialModel(): UiModel {
  return {
    connection: "connecting",
    sessionId: null,
    phase: null,
    chat: [],
    suggestions: [],
    panel: null,
    objectLabels: [],
    holograms: [],
    timers: [],
    lastSpeak: null,
    panelMoves: 0,
    lastTimeNs: 0,
    commandCount: 0,
    acks: 0,
    diagnostics: [],
    notices: [],
  };
}

export function applyCommand(model: UiModel, timeNs: number, cmd: Command): UiModel {
  const next: UiModel = { ...model, lastTimeNs: timeNs, commandCount: model.commandCount + 1 };
  switch (cmd.type) {
    case "set_task_panel":
      next.panel = {
        taskName: cmd.task_name,
        steps: cmd.steps,
        cursor: cmd.cursor,
        gathered: cmd.gathered,
      };
      break;
    case "add_chat_bubble":
      next.chat = [...model.chat, { side: cmd.side, text: cmd.text }];
      break;
    case "show_suggestions":
      next.suggestions = [...cmd.suggestions];
      break;
    case "clear_suggestions":
      next.suggestions = [];
      break;
    case "speak":
      next.lastSpeak = { utteranceId: cmd.utterance_id, text: cmd.text };
      break;
    case "place_hologram":
      next.holograms = [
        ...model.holograms.filter((h) => h.hologramId !== cmd.hologram_id),
        {
          hologramId: cmd.hologram_id,
          kind: cmd.kind,
          pose: cmd.pose,
          text: cmd.text,
          modelName: cmd.model_name,
        },
      ];
      break;
    case "remove_hologram":
      next.holograms = model.holograms.filter((h) => h.hologramId !== cmd.hologram_id);
      break;
    case "show_object_label":
      next.objectLabels = [
        ...model.objectLabels.filter((l) => l.trackId !== cmd.track_id),
        { trackId: cmd.track_id, label: cmd.label, position: cmd.position },
      ];
      break;
    case "start_timer":
      next.timers = [
        ...model.timers.filter((t) => t.timerId !== cmd.timer_id),
        { timerId: cmd.timer_id, durationS: cmd.duration_s, startedAtNs: timeNs },
      ];
      break;
    case "stop_timer":
      next.timers = model.timers.filter((t) => t.timerId !== cmd.timer_id);
      break;
    case "move_panel_to_user":
      next.panelMoves = model.panelMoves + 1;
      break;
  }
  return next;
}

/** Reduce one raw inbound frame. Anything unparseable becomes a visible notice. */
export function applyRaw(model: UiModel, raw: unknown): UiModel {
  const parsed = parseServerMessage(raw);
  if (!parsed.ok) {
    const kind = unknownCommandKind(raw);
    if (kind !== null) {
      return {
        ...model,
        diagnostics: [...model.diagnostics, `unknown command kind "${kind}"`],
      };
    }
    return { ...model, notices: [...model.notices, `bad message: ${parsed.reason}`] };
  }
  const msg = parsed.value;
  switch (msg.type) {
    case "hello":
      return {
        ...model,
        sessionId: msg.session_id,
        phase: msg.phase,
      };
    case "command":
      return applyCommand(model, msg.time_ns, msg.command);
    case "ack":
      return { ...model, acks: model.acks + 1 };
    case "error":
      return { ...model, notices: [...model.notices, `server: ${msg.message}`] };
  }
}

export function setConnection(model: UiModel, connection: ConnectionState): UiModel {
  return { ...model, connection };
}

export function addNotice(model: UiModel, text: string): UiModel {
  return { ...model, notices: [...model.notices, text] };
}

/** Client-side countdown; authoritative expiry still arrives as stop_timer. */
export function timerRemainingS(timer: ActiveTimer, nowNs: number): number {
  const elapsed = (nowNs - timer.startedAtNs) / 1e9;
  return Math.max(0, timer.durationS - elapsed);
}

const KNOWN_COMMAND_KINDS = new Set([
  "set_task_panel",
  "add_chat_bubble",
  "show_suggestions",
  "clear_suggestions",
  "speak",
  "place_hologram",
  "remove_hologram",
  "show_object_label",
  "start_timer",
  "stop_timer",
  "move_panel_to_user",
]);

// A wrapper that is shaped like a command push but whose inner type tag is not
// one we render. The tag is surfaced so the operator can see what was skipped;
// a known tag that failed validation is a schema violation, not an unknown.
function unknownCommandKind(raw: unknown): string | null {
  if (typeof raw !== "object" || raw === null) return null;
  const outer = raw as Record<string, unknown>;
  if (outer["type"] !== "command") return null;
  const inner = outer["command"];
  if (typeof inner !== "object" || inner === null) return null;
  const tag = (inner as Record<string, unknown>)["type"];
  if (typeof tag !== "string" || KNOWN_COMMAND_KINDS.has(tag)) return null;
  return tag;
}
