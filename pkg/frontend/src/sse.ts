// Resumable event stream: one consumer per tab, reconnects from the last
// seen seq so nothing is missed and nothing is double-applied.

import type { EventRecord } from "./types.js";

export interface StreamHandle {
  close(): void;
}

export function subscribe(
  eventsUrl: string,
  since: number,
  onEvent: (ev: EventRecord) => void,
  onStatus: (connected: boolean) => void,
  retryMs = 2000,
): StreamHandle {
  let lastSeq = since;
  let closed = false;
  let source: EventSource | null = null;
  let timer: ReturnType<typeof setTimeout> | null = null;

  const open = () => {
    if (closed) return;
    source = new EventSource(`${eventsUrl}?since=${lastSeq}`);
    source.onopen = () => onStatus(true);
    source.onmessage = (msg) => {
      const record = JSON.parse(msg.data) as EventRecord;
      if (record.seq > lastSeq) {
        lastSeq = record.seq;
        onEvent(record);
      }
    };
    source.onerror = () => {
      onStatus(false);
      source?.close();
      timer = setTimeout(open, retryMs); // resume via ?since=lastSeq
    };
  };
  open();

  return {
    close() {
      closed = true;
      if (timer) clearTimeout(timer);
      source?.close();
    },
  };
}
