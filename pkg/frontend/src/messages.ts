// Runtime validation for everything crossing the /ws socket. Mirrors
// schemas/ws-messages.schema.json at the repo root; if the two drift, the
// golden-log tests on either side of the wire catch it.

import { z } from "zod";

export const vec3 = z.tuple([z.number(), z.number(), z.number()]);

/** Row-major 4x4 rigid transform, object-to-world. */
export const pose16 = z.array(z.number()).length(16);

export const panelStep = z.strictObject({
  kind: z.enum(["gather", "simple", "complex"]),
  instruction: z.string(),
  substeps: z.array(z.string()),
  objects: z.array(z.string()),
});
export type PanelStep = z.infer<typeof panelStep>;

// (step, substep|null); null cursor means no step is active.
export const panelCursor = z
  .tuple([z.number().int(), z.number().int().nullable()])
  .nullable();
export type PanelCursor = z.infer<typeof panelCursor>;

export const command = z.discriminatedUnion("type", [
  z.strictObject({
    type: z.literal("set_task_panel"),
    task_name: z.string(),
    steps: z.array(panelStep),
    cursor: panelCursor,
    gathered: z.array(z.string()),
  }),
  z.strictObject({
    type: z.literal("add_chat_bubble"),
    side: z.enum(["assistant", "user"]),
    text: z.string(),
  }),
  z.strictObject({
    type: z.literal("show_suggestions"),
    suggestions: z.array(z.string()).min(1).max(3),
  }),
  z.strictObject({ type: z.literal("clear_suggestions") }),
  z.strictObject({
    type: z.literal("speak"),
    utterance_id: z.number().int().min(1),
    text: z.string(),
  }),
  z.strictObject({
    type: z.literal("place_hologram"),
    hologram_id: z.string(),
    kind: z.string(),
    pose: pose16,
    text: z.string().nullable(),
    model_name: z.string().nullable(),
  }),
  z.strictObject({ type: z.literal("remove_hologram"), hologram_id: z.string() }),
  z.strictObject({
    type: z.literal("show_object_label"),
    track_id: z.number().int(),
    label: z.string(),
    position: vec3,
  }),
  z.strictObject({
    type: z.literal("start_timer"),
    timer_id: z.string(),
    duration_s: z.number().positive(),
  }),
  z.strictObject({ type: z.literal("stop_timer"), timer_id: z.string() }),
  z.strictObject({ type: z.literal("move_panel_to_user") }),
]);
export type Command = z.infer<typeof command>;

// hello carries a status snapshot; the server may add fields, so stay loose.
export const helloMessage = z.looseObject({
  type: z.literal("hello"),
  session_id: z.string().nullable(),
  phase: z.string().nullable(),
  envelopes_in: z.number().int(),
  commands_out: z.number().int(),
  done: z.boolean(),
});

export const serverMessage = z.discriminatedUnion("type", [
  helloMessage,
  z.strictObject({
    type: z.literal("command"),
    time_ns: z.number().int().min(0),
    command,
  }),
  z.strictObject({ type: z.literal("ack") }),
  z.strictObject({ type: z.literal("error"), message: z.string() }),
]);
export type ServerMessage = z.infer<typeof serverMessage>;

export const clientMessage = z.discriminatedUnion("type", [
  z.strictObject({ type: z.literal("utterance"), text: z.string().min(1).max(4096) }),
  z.strictObject({ type: z.literal("step_done") }),
  z.strictObject({ type: z.literal("declare_object"), label: z.string().min(1).max(256) }),
  z.strictObject({ type: z.literal("palm_open"), open: z.boolean() }),
  z.strictObject({ type: z.literal("move_panel") }),
]);
export type ClientMessage = z.infer<typeof clientMessage>;

export interface ParseOk<T> {
  ok: true;
  value: T;
}

export interface ParseFail {
  ok: false;
  reason: string;
}

export function parseServerMessage(raw: unknown): ParseOk<ServerMessage> | ParseFail {
  const result = serverMessage.safeParse(raw);
  if (result.success) {
    return { ok: true, value: result.data };
  }
  const first = result.error.issues[0];
  const path = first && first.path.length ? ` at ${first.path.join(".")}` : "";
  return { ok: false, reason: `${first ? first.message : "invalid message"}${path}` };
}
