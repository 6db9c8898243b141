// Thin typed wrappers over the service routes. fetch is injectable so the
// controller tests can script the server.

import type { CommandResponse, EventRecord, WorkspaceSnapshot } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string,
    private workspaceId: string,
    private fetchImpl: FetchLike = fetch.bind(globalThis),
  ) {}

  get eventsUrl(): string {
    return `${this.base}/api/workspaces/${this.workspaceId}/events`;
  }

  async snapshot(): Promise<WorkspaceSnapshot> {
    const resp = await this.fetchImpl(`${this.base}/api/workspaces/${this.workspaceId}`);
    if (!resp.ok) throw new Error(`snapshot failed: ${resp.status}`);
    return (await resp.json()) as WorkspaceSnapshot;
  }

  async command(body: Record<string, unknown>): Promise<CommandResponse> {
    const resp = await this.fetchImpl(
      `${this.base}/api/workspaces/${this.workspaceId}/commands`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      },
    );
    return { status: resp.status, body: await resp.json() };
  }

  async coverage(focus: string): Promise<number> {
    const resp = await this.fetchImpl(
      `${this.base}/api/workspaces/${this.workspaceId}/metrics/coverage?focus=` +
        encodeURIComponent(focus),
    );
    if (!resp.ok) throw new Error(`coverage failed: ${resp.status}`);
    return (await resp.json()).coverage as number;
  }
}

export function parseSseChunk(buffer: string): { events: EventRecord[]; rest: string } {
  // SSE frames are separated by a blank line; `data:` lines carry the record.
  const events: EventRecord[] = [];
  const frames = buffer.split("\n\n");
  const rest = frames.pop() ?? "";
  for (const frame of frames) {
    for (const line of frame.split("\n")) {
      if (line.startsWith("data: ")) {
        events.push(JSON.parse(line.slice("data: ".length)) as EventRecord);
      }
    }
  }
  return { events, rest };
}
