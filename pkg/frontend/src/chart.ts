import type { ChartViewModel, SeriesPoint } from "./viewmodel.js";
import { TEMPERATURE_SERIES } from "./viewmodel.js";

export interface Scale {
  lo: number;
  hi: number;
}

/** Padded value range over every visible temperature-axis series. */
export function valueRange(points: SeriesPoint[][]): Scale {
  let lo = Infinity;
  let hi = -Infinity;
  for (const series of points) {
    for (const p of series) {
      if (p.value < lo) lo = p.value;
      if (p.value > hi) hi = p.value;
    }
  }
  if (lo > hi) return { lo: 0, hi: 1 };
  const pad = Math.max(0.5, (hi - lo) * 0.08);
  return { lo: lo - pad, hi: hi + pad };
}

export function toX(step: number, start: number, span: number, width: number): number {
  return ((step - start) / Math.max(span, 1)) * width;
}

export function toY(value: number, scale: Scale, height: number): number {
  return height - ((value - scale.lo) / (scale.hi - scale.lo)) * height;
}

const SERIES_STYLE: Record<string, { color: string; dash: number[] }> = {
  t_in: { color: "#c0392b", dash: [] },
  t_out: { color: "#2471a3", dash: [] },
  t_set: { color: "#7d7d7d", dash: [6, 4] },
};

const PREDICTION_COLORS = ["#1e8449", "#8e44ad", "#b7950b", "#148f77"];

const MARKER_STYLE: Record<string, string> = {
  "predicted-switch-off": "#e67e22",
  "predicted-switch-on": "#16a085",
  peak: "#95a5a6",
};

function drawSeries(
  ctx: CanvasRenderingContext2D,
  points: SeriesPoint[],
  start: number,
  span: number,
  scale: Scale,
  width: number,
  height: number,
  color: string,
  dash: number[],
): void {
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.setLineDash(dash);
  ctx.beginPath();
  let penDown = false;
  for (const p of points) {
    const x = toX(p.step, start, span, width);
    const y = toY(p.value, scale, height);
    // a gap flag breaks the line: no interpolation across dropped frames
    if (p.gapBefore || !penDown) {
      ctx.moveTo(x, y);
      penDown = true;
    } else {
      ctx.lineTo(x, y);
    }
  }
  ctx.stroke();
  ctx.setLineDash([]);
}

export function render(view: ChartViewModel, canvas: HTMLCanvasElement): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);

  if (view.lastStep === null) {
    ctx.fillStyle = "#888";
    ctx.font = "14px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText("waiting for data", width / 2, height / 2);
    ctx.strokeStyle = "#ccc";
    ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
    return;
  }

  const start = view.windowStart();
  const span = view.windowMinutes - 1;
  const labels = view.horizonLabels();
  const tempSeries = TEMPERATURE_SERIES.map((name) => view.visible(name));
  const predSeries = labels.map((label) => view.visible(`pred:${label}`));
  const scale = valueRange([...tempSeries, ...predSeries]);

  // hysteresis band around the setpoint
  const setpoints = view.visible("t_set");
  if (setpoints.length > 0) {
    const sp = setpoints[setpoints.length - 1].value;
    const top = toY(sp + 1, scale, height);
    const bottom = toY(sp - 1, scale, height);
    ctx.fillStyle = "rgba(125,125,125,0.08)";
    ctx.fillRect(0, top, width, bottom - top);
  }

  for (const marker of view.visibleMarkers()) {
    const x = toX(marker.step, start, span, width);
    ctx.strokeStyle = MARKER_STYLE[marker.kind] ?? "#bbb";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, height);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  TEMPERATURE_SERIES.forEach((name, i) => {
    const style = SERIES_STYLE[name];
    drawSeries(ctx, tempSeries[i], start, span, scale, width, height, style.color, style.dash);
  });
  predSeries.forEach((points, i) => {
    const color = PREDICTION_COLORS[i % PREDICTION_COLORS.length];
    drawSeries(ctx, points, start, span, scale, width, height, color, [2, 3]);
  });

  // heater state strip along the bottom edge
  ctx.fillStyle = "rgba(192,57,43,0.35)";
  for (const p of view.visible("heater")) {
    if (p.value > 0) {
      ctx.fillRect(toX(p.step, start, span, width), height - 6, width / Math.max(span, 1) + 1, 6);
    }
  }
}
