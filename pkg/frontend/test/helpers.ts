import { readFileSync, writeFileSync } from "node:fs";
import { dirname, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { expect } from "vitest";

import { OperatorClient, SocketLike } from "../src/client";
import { UiModel } from "../src/model";

export const REPO_ROOT = resolve(dirname(fileURLToPath(import.meta.url)), "../..");

export function goldenPath(name: string): string {
  return resolve(REPO_ROOT, "goldens", name);
}

export function readJson<T>(path: string): T {
  return JSON.parse(readFileSync(path, "utf-8")) as T;
}

export function writeJson(path: string, value: unknown): void {
  writeFileSync(path, JSON.stringify(value, null, 1) + "\n");
}

// process.stdout.write: the reporter drops console.log from passing tests.
function printLine(line: string): void {
  process.stdout.write(line + "\n");
}

/** Print the acceptance line first (like the server-side suite), then assert. */
export function report(n: number, desc: string, ok: boolean, detail = ""): void {
  const line = `ACCEPTANCE ${n}: ${ok ? "PASS" : "FAIL"} - ${desc}${detail ? ` [${detail}]` : ""}`;
  printLine(line);
  expect(ok, line).toBe(true);
}

/** Deep-equality variant that keeps vitest's diff output on failure. */
export function reportEqual(n: number, desc: string, got: unknown, want: unknown, detail = ""): void {
  try {
    expect(got).toEqual(want);
  } catch (err) {
    printLine(`ACCEPTANCE ${n}: FAIL - ${desc}`);
    throw err;
  }
  printLine(`ACCEPTANCE ${n}: PASS - ${desc}${detail ? ` [${detail}]` : ""}`);
}

export function awaitModel(
  client: OperatorClient,
  pred: (model: UiModel) => boolean,
  desc: string,
  timeoutMs = 15_000,
): Promise<UiModel> {
  return new Promise((resolvePromise, reject) => {
    if (pred(client.model)) {
      resolvePromise(client.model);
      return;
    }
    const timer = setTimeout(() => {
      unsubscribe();
      const seen = client.model.chat.map((b) => b.text).slice(-4);
      reject(new Error(`timed out waiting for ${desc}; recent chat: ${JSON.stringify(seen)}`));
    }, timeoutMs);
    const unsubscribe = client.subscribe((model) => {
      if (pred(model)) {
        clearTimeout(timer);
        unsubscribe();
        resolvePromise(model);
      }
    });
  });
}

/** In-memory socket double: captures sends, lets tests inject frames. */
export class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  open(): void {
    this.onopen?.();
  }

  receive(obj: unknown): void {
    this.onmessage?.({ data: typeof obj === "string" ? obj : JSON.stringify(obj) });
  }
}
