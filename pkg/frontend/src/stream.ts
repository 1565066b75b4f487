import type { TelemetryFrame } from "./types.js";

/**
 * Splits a chunked NDJSON byte stream into complete lines. Feed it chunks;
 * it returns the lines completed by each chunk and keeps the remainder.
 */
export class LineSplitter {
  private remainder = "";

  push(chunk: string): string[] {
    const text = this.remainder + chunk;
    const parts = text.split("\n");
    this.remainder = parts.pop() ?? "";
    return parts.filter((line) => line.length > 0);
  }

  /** Any trailing bytes that never saw a newline (stream ended mid-line). */
  flush(): string | null {
    const rest = this.remainder;
    this.remainder = "";
    return rest.length > 0 ? rest : null;
  }
}

/** Reconnect delay schedule: exponential from 500 ms, capped at 8 s. */
export function backoffMs(attempt: number): number {
  return Math.min(500 * 2 ** Math.max(0, attempt), 8000);
}

export interface StreamHandlers {
  onFrame(frame: TelemetryFrame): void;
  onStatus(connected: boolean): void;
}

type FetchLike = (url: string, init?: { signal?: AbortSignal }) => Promise<Response>;

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Long-lived NDJSON consumer: connects to the service's stream endpoint,
 * parses one frame per line, and reconnects with exponential backoff when
 * the connection drops. Already-buffered frames survive a reconnect; the
 * caller learns about connection state through `onStatus`.
 */
export class StreamClient {
  private stopped = false;
  private controller: AbortController | null = null;

  constructor(
    private readonly url: string,
    private readonly handlers: StreamHandlers,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  async run(): Promise<void> {
    let attempt = 0;
    while (!this.stopped) {
      try {
        const sawFrame = await this.consumeOnce();
        if (sawFrame) attempt = 0;
      } catch {
        // fall through to backoff; aborts land here too
      }
      this.handlers.onStatus(false);
      if (this.stopped) return;
      await sleep(backoffMs(attempt));
      attempt += 1;
    }
  }

  private async consumeOnce(): Promise<boolean> {
    this.controller = new AbortController();
    const response = await this.fetchImpl(this.url, { signal: this.controller.signal });
    if (!response.ok || response.body === null) {
      throw new Error(`stream request failed: ${response.status}`);
    }
    this.handlers.onStatus(true);
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    const splitter = new LineSplitter();
    let sawFrame = false;
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return sawFrame;
      for (const line of splitter.push(decoder.decode(value, { stream: true }))) {
        this.handlers.onFrame(JSON.parse(line) as TelemetryFrame);
        sawFrame = true;
      }
    }
  }
}
