import { readFileSync } from "node:fs";

import type { ViewModel } from "../src/projection.js";
import { project } from "../src/projection.js";
import type { EventRecord, WorkspaceSnapshot } from "../src/types.js";

export interface ScriptedServer {
  snapshot: WorkspaceSnapshot;
  events: EventRecord[];
}

export function loadScripted(): ScriptedServer {
  const url = new URL("../../test/fixtures/scripted.json", import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as ScriptedServer;
}

export function scriptedViewModel(upTo?: number): ViewModel {
  const { snapshot, events } = loadScripted();
  const slice = upTo === undefined ? events : events.filter((e) => e.seq <= upTo);
  return project(snapshot, slice);
}

export function readGolden(name: string): string {
  const url = new URL(`../../test/golden/${name}`, import.meta.url);
  return readFileSync(url, "utf-8");
}

/** Minimal Response stand-in so controller tests can script the server. */
export function fakeResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => body,
  } as unknown as Response;
}
