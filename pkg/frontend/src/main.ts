import { render } from "./chart.js";
import { CommandSender } from "./commands.js";
import { StreamClient } from "./stream.js";
import type { CommandKind } from "./types.js";
import { ChartViewModel } from "./viewmodel.js";

const view = new ChartViewModel();
const sender = new CommandSender("/command");

const canvas = document.getElementById("chart") as HTMLCanvasElement;
const stepEl = document.getElementById("step")!;
const speedEl = document.getElementById("speed")!;
const connEl = document.getElementById("connection")!;
const noticeEl = document.getElementById("notice")!;
const setpointInput = document.getElementById("setpoint") as HTMLInputElement;
const setpointValue = document.getElementById("setpoint-value")!;
const speedSelect = document.getElementById("speed-select") as HTMLSelectElement;
const pauseButton = document.getElementById("pause") as HTMLButtonElement;
const resumeButton = document.getElementById("resume") as HTMLButtonElement;
const scenarioInput = document.getElementById("scenario") as HTMLInputElement;
const scenarioButton = document.getElementById("scenario-apply") as HTMLButtonElement;
const windowSelect = document.getElementById("window-select") as HTMLSelectElement;

let dirty = true;

function frameLoop(): void {
  if (dirty) {
    render(view, canvas);
    stepEl.textContent = view.lastStep === null ? "-" : String(view.lastStep);
    speedEl.textContent = view.speed === 0 ? "paused" : `${view.speed}x`;
    noticeEl.textContent = view.speed >= 600 ? "decimated: every 10th step shown" : "";
    dirty = false;
  }
  requestAnimationFrame(frameLoop);
}

const client = new StreamClient("/stream", {
  onFrame(frame) {
    view.ingest(frame);
    dirty = true;
  },
  onStatus(connected) {
    connEl.textContent = connected ? "live" : "reconnecting";
    connEl.className = connected ? "status-ok" : "status-bad";
    dirty = true;
  },
});

async function issue(control: HTMLButtonElement | HTMLInputElement, kind: CommandKind, value?: number | string): Promise<void> {
  control.disabled = true;
  const result = await sender.send(kind, value);
  control.disabled = false;
  noticeEl.textContent = result.ok ? "" : result.detail;
}

setpointInput.addEventListener("input", () => {
  setpointValue.textContent = `${setpointInput.value} °C`;
});
setpointInput.addEventListener("change", () => {
  void issue(setpointInput, "set-setpoint", Number(setpointInput.value));
});
speedSelect.addEventListener("change", () => {
  void issue(speedSelect as unknown as HTMLInputElement, "set-speed", Number(speedSelect.value));
});
pauseButton.addEventListener("click", () => void issue(pauseButton, "pause"));
resumeButton.addEventListener("click", () => void issue(resumeButton, "resume"));
scenarioButton.addEventListener("click", () => {
  if (scenarioInput.value.trim().length > 0) {
    void issue(scenarioButton, "select-weather-scenario", scenarioInput.value.trim());
  }
});
windowSelect.addEventListener("change", () => {
  view.windowMinutes = Number(windowSelect.value);
  dirty = true;
});

void client.run();
requestAnimationFrame(frameLoop);
