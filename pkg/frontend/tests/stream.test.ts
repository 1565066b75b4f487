import { describe, expect, it } from "vitest";

import { backoffMs, LineSplitter, StreamClient } from "../src/stream.js";
import type { TelemetryFrame } from "../src/types.js";

describe("LineSplitter", () => {
  it("reassembles lines across chunk boundaries", () => {
    const s = new LineSplitter();
    expect(s.push('{"a":')).toEqual([]);
    expect(s.push('1}\n{"b":2}\n{"c"')).toEqual(['{"a":1}', '{"b":2}']);
    expect(s.push(":3}\n")).toEqual(['{"c":3}']);
    expect(s.flush()).toBeNull();
  });

  it("drops empty lines and keeps a trailing fragment", () => {
    const s = new LineSplitter();
    expect(s.push("\n\nx")).toEqual([]);
    expect(s.flush()).toBe("x");
    expect(s.flush()).toBeNull();
  });
});

describe("backoffMs", () => {
  it("doubles from 500 ms and caps at 8 s", () => {
    expect([0, 1, 2, 3, 4, 5, 99].map(backoffMs)).toEqual([
      500, 1000, 2000, 4000, 8000, 8000, 8000,
    ]);
  });
});

function ndjsonResponse(lines: string[]): Response {
  const encoder = new TextEncoder();
  const body = new ReadableStream<Uint8Array>({
    start(controller) {
      for (const line of lines) controller.enqueue(encoder.encode(line));
      controller.close();
    },
  });
  return new Response(body, { status: 200 });
}

describe("StreamClient", () => {
  it("parses frames and reconnects after the stream ends", async () => {
    const frame = (step: number) =>
      JSON.stringify({
        schema_version: 1,
        step,
        wall_time: 0,
        speed: 60,
        house: { t_in: 20, t_out: 8, heater: 0, t_set: 23 },
        prediction: {},
        events: [],
        gap: false,
      });
    let connections = 0;
    const fetchImpl = async (): Promise<Response> => {
      connections += 1;
      if (connections === 1) return ndjsonResponse([frame(0) + "\n", frame(1) + "\n"]);
      if (connections === 2) return new Response("busy", { status: 503 });
      return ndjsonResponse([frame(2) + "\n"]);
    };

    const frames: TelemetryFrame[] = [];
    const statuses: boolean[] = [];
    const client = new StreamClient(
      "/stream",
      {
        onFrame: (f) => {
          frames.push(f);
          if (f.step === 2) client.stop();
        },
        onStatus: (connected) => statuses.push(connected),
      },
      fetchImpl,
    );
    await client.run();

    expect(frames.map((f) => f.step)).toEqual([0, 1, 2]);
    expect(connections).toBe(3);
    // connected, dropped, (503: straight to dropped), connected, stopped
    expect(statuses.filter((s) => s)).toHaveLength(2);
    expect(statuses[statuses.length - 1]).toBe(false);
  });

  it("stop() prevents further connection attempts", async () => {
    let connections = 0;
    const client = new StreamClient(
      "/stream",
      { onFrame: () => {}, onStatus: () => {} },
      async () => {
        connections += 1;
        client.stop();
        return new Response("nope", { status: 500 });
      },
    );
    await client.run();
    expect(connections).toBe(1);
  });
});
