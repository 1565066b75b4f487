import type { EventMarker, TelemetryFrame } from "./types.js";

export interface SeriesPoint {
  step: number;
  value: number;
  /** true when frames were dropped before this point; render a line break */
  gapBefore: boolean;
}

/** Fixed-capacity FIFO; pushing past capacity evicts the oldest entry. */
export class RingBuffer<T> {
  private items: T[] = [];

  constructor(readonly capacity: number) {
    if (!Number.isInteger(capacity) || capacity < 1) {
      throw new Error(`ring buffer capacity must be a positive integer, got ${capacity}`);
    }
  }

  push(item: T): void {
    this.items.push(item);
    if (this.items.length > this.capacity) {
      this.items.shift();
    }
  }

  get length(): number {
    return this.items.length;
  }

  last(): T | undefined {
    return this.items[this.items.length - 1];
  }

  toArray(): readonly T[] {
    return this.items;
  }
}

export const TEMPERATURE_SERIES = ["t_in", "t_out", "t_set"] as const;

const MAX_MARKERS = 512;

/**
 * Client-side state behind the chart: one ring buffer per series, all
 * aligned on the frame's step index, plus the event marker list. Values are
 * stored exactly as received; scaling happens at draw time only.
 */
export class ChartViewModel {
  readonly series = new Map<string, RingBuffer<SeriesPoint>>();
  markers: EventMarker[] = [];
  windowMinutes: number;
  lastStep: number | null = null;
  speed = 0;
  frameCount = 0;

  constructor(readonly capacity = 3600, windowMinutes = 240) {
    this.windowMinutes = windowMinutes;
  }

  private buffer(name: string): RingBuffer<SeriesPoint> {
    let buf = this.series.get(name);
    if (buf === undefined) {
      buf = new RingBuffer<SeriesPoint>(this.capacity);
      this.series.set(name, buf);
    }
    return buf;
  }

  horizonLabels(): string[] {
    return [...this.series.keys()]
      .filter((name) => name.startsWith("pred:"))
      .map((name) => name.slice("pred:".length));
  }

  ingest(frame: TelemetryFrame): void {
    const gapBefore = frame.gap;
    const put = (name: string, value: number) =>
      this.buffer(name).push({ step: frame.step, value, gapBefore });

    put("t_in", frame.house.t_in);
    put("t_out", frame.house.t_out);
    put("t_set", frame.house.t_set);
    put("heater", frame.house.heater);
    for (const [label, pred] of Object.entries(frame.prediction)) {
      put(`pred:${label}`, pred.normalized);
      put(`pred_raw:${label}`, pred.raw);
    }
    for (const marker of frame.events) {
      this.markers.push(marker);
    }
    if (this.markers.length > MAX_MARKERS) {
      this.markers = this.markers.slice(this.markers.length - MAX_MARKERS);
    }
    this.lastStep = frame.step;
    this.speed = frame.speed;
    this.frameCount += 1;
  }

  /** First step of the visible window (assumes one step per minute). */
  windowStart(): number {
    if (this.lastStep === null) return 0;
    return Math.max(0, this.lastStep - this.windowMinutes + 1);
  }

  /** Points of one series inside the visible window, oldest first. */
  visible(name: string): SeriesPoint[] {
    const buf = this.series.get(name);
    if (buf === undefined) return [];
    const start = this.windowStart();
    return buf.toArray().filter((p) => p.step >= start);
  }

  visibleMarkers(): EventMarker[] {
    const start = this.windowStart();
    return this.markers.filter((m) => m.step >= start);
  }
}
