// Browser entry point: binds the controller to the page, renders the
// gel with its band overlay on a pannable, zoomable canvas, and keeps
// the band table, ratio readout, and config panel in sync with the
// view state. All numbers shown here come from service responses.

import { GelClient } from "./api.js";
import { Controller } from "./controller.js";
import { availableStages, type StageName, type ViewState } from "./state.js";
import type { BandDoc } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const serviceBase =
  new URLSearchParams(window.location.search).get("api") ?? "http://127.0.0.1:8765";
const client = new GelClient(serviceBase);
const controller = new Controller(client);

const fileInput = el<HTMLInputElement>("file");
const stageSelect = el<HTMLSelectElement>("stage");
const normalizeBox = el<HTMLInputElement>("normalize");
const enhanceButton = el<HTMLButtonElement>("enhance");
const alphaInput = el<HTMLInputElement>("alpha");
const alphaApply = el<HTMLButtonElement>("alpha-apply");
const alphaClear = el<HTMLButtonElement>("alpha-clear");
const prominenceInput = el<HTMLInputElement>("prominence");
const minAreaInput = el<HTMLInputElement>("min-area");
const tuningApply = el<HTMLButtonElement>("tuning-apply");
const reportButton = el<HTMLButtonElement>("save-report");
const noticeLine = el<HTMLElement>("notice");
const decisionLine = el<HTMLElement>("decision");
const ratioLine = el<HTMLElement>("ratio");
const tableBody = el<HTMLTableSectionElement>("bands");
const canvas = el<HTMLCanvasElement>("view");
const ctx = canvas.getContext("2d");
if (ctx === null) {
  throw new Error("canvas 2d context unavailable");
}

// viewport transform: screen = image * scale + pan (image coordinates
// stay the single source of truth for overlay geometry)
let scale = 1;
let pan = { x: 0, y: 0 };
let stageBitmap: ImageBitmap | null = null;
let stageKey = "";

function toImagePoint(ev: MouseEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  const sx = ev.clientX - rect.left;
  const sy = ev.clientY - rect.top;
  return { x: (sx - pan.x) / scale, y: (sy - pan.y) / scale };
}

function fitImage(width: number, height: number): void {
  const margin = 16;
  scale = Math.min(
    (canvas.width - margin) / width,
    (canvas.height - margin) / height,
    4,
  );
  pan = {
    x: (canvas.width - width * scale) / 2,
    y: (canvas.height - height * scale) / 2,
  };
}

function strokeBand(band: BandDoc, color: string, emphasis: boolean): void {
  if (ctx === null) {
    return;
  }
  const [x0, y0, x1, y1] = band.bbox;
  ctx.strokeStyle = color;
  ctx.lineWidth = (emphasis ? 2.5 : 1.2) / scale;
  ctx.strokeRect(x0 - 0.5, y0 - 0.5, x1 - x0 + 1, y1 - y0 + 1);
  ctx.fillStyle = color;
  ctx.font = `${12 / scale}px sans-serif`;
  ctx.fillText(String(band.label), x0, Math.max(y0 - 3 / scale, 10 / scale));
}

function draw(state: ViewState): void {
  if (ctx === null) {
    return;
  }
  ctx.setTransform(1, 0, 0, 1, 0, 0);
  ctx.fillStyle = "#14161a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  ctx.setTransform(scale, 0, 0, scale, pan.x, pan.y);
  ctx.imageSmoothingEnabled = scale < 1;
  if (stageBitmap !== null) {
    ctx.drawImage(stageBitmap, 0, 0);
  }
  for (const band of state.bands) {
    const isRef = band.label === state.selection.reference;
    const isTarget = band.label === state.selection.target;
    const color = isRef ? "#ffd34d" : isTarget ? "#4dd6ff" : "#ff5f5f";
    strokeBand(band, color, isRef || isTarget);
  }
}

async function refreshStageImage(state: ViewState): Promise<void> {
  if (state.sessionId === null) {
    stageBitmap = null;
    stageKey = "";
    return;
  }
  const key = [
    state.sessionId,
    state.stage,
    normalizeBox.checked ? 1 : 0,
    JSON.stringify(state.config),
  ].join("|");
  if (key === stageKey) {
    return;
  }
  try {
    const blob = await client.stageImage(
      state.sessionId,
      state.stage,
      normalizeBox.checked,
    );
    stageBitmap = await createImageBitmap(blob);
    stageKey = key;
    if (state.imageSize) {
      fitImage(state.imageSize.width, state.imageSize.height);
    }
    draw(controller.state);
  } catch {
    // analysis errors already surface through the controller's notice
  }
}

function renderStageOptions(state: ViewState): void {
  const stages = availableStages(state.config);
  const current = stageSelect.value;
  stageSelect.replaceChildren(
    ...stages.map((name) => {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      return option;
    }),
  );
  stageSelect.value = stages.includes(current as StageName) ? current : state.stage;
  stageSelect.value = state.stage;
}

function renderTable(state: ViewState): void {
  tableBody.replaceChildren(
    ...state.bands.map((band) => {
      const row = document.createElement("tr");
      const role =
        band.label === state.selection.reference
          ? "ref"
          : band.label === state.selection.target
            ? "target"
            : "";
      row.className = role;
      const cells = [
        String(band.label),
        role === "ref" ? "reference" : role,
        String(band.area),
        `${band.centroid[0].toFixed(1)}, ${band.centroid[1].toFixed(1)}`,
        band.mean_intensity.toFixed(1),
      ];
      row.replaceChildren(
        ...cells.map((text) => {
          const cell = document.createElement("td");
          cell.textContent = text;
          return cell;
        }),
      );
      row.addEventListener("click", () => {
        void controller.click({ x: band.centroid[0], y: band.centroid[1] });
      });
      return row;
    }),
  );
}

function render(state: ViewState): void {
  renderStageOptions(state);
  renderTable(state);

  noticeLine.textContent = state.notice ?? "";
  noticeLine.hidden = state.notice === null;

  if (state.decision !== null) {
    const d = state.decision;
    decisionLine.textContent =
      `threshold ${d.th_level}  alpha ${d.alpha}  (${d.source})`;
  } else {
    decisionLine.textContent = "no analysis yet";
  }

  if (state.ratio !== null) {
    ratioLine.textContent =
      `ratio of band ${state.ratio.n} vs reference ${state.ratio.ref}: ` +
      state.ratio.ratio.toFixed(6);
  } else if (state.selection.reference !== null && state.selection.target === null) {
    ratioLine.textContent =
      `reference: band ${state.selection.reference}; click a second band`;
  } else {
    ratioLine.textContent = "click a reference band, then a second band";
  }

  enhanceButton.textContent = state.config?.enhance
    ? "enhance: on"
    : "enhance: off";
  for (const control of [
    enhanceButton, alphaInput, alphaApply, alphaClear,
    prominenceInput, minAreaInput, tuningApply, reportButton,
  ]) {
    control.disabled = state.busy || state.sessionId === null;
  }
  alphaInput.classList.toggle("attention", state.highlightOverride);

  void refreshStageImage(state);
  draw(state);
}

controller.onChange(render);

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (file) {
    void controller.openImage(file, file.name);
  }
});

stageSelect.addEventListener("change", () => {
  controller.selectStage(stageSelect.value as StageName);
});
normalizeBox.addEventListener("change", () => {
  stageKey = "";
  void refreshStageImage(controller.state);
});

enhanceButton.addEventListener("click", () => {
  void controller.toggleEnhance();
});

alphaApply.addEventListener("click", () => {
  const value = Number(alphaInput.value);
  if (Number.isFinite(value) && value > 0 && value < 1) {
    void controller.applyDeltas({ alpha_override: value });
  }
});
alphaClear.addEventListener("click", () => {
  alphaInput.value = "";
  void controller.applyDeltas({ alpha_override: null });
});

tuningApply.addEventListener("click", () => {
  const deltas: Record<string, unknown> = {};
  const prominence = Number(prominenceInput.value);
  if (prominenceInput.value !== "" && Number.isFinite(prominence)) {
    deltas.prominence_frac = prominence;
  }
  const minArea = Number(minAreaInput.value);
  if (minAreaInput.value !== "" && Number.isInteger(minArea)) {
    deltas.min_band_area = minArea;
  }
  void controller.applyDeltas(deltas);
});

reportButton.addEventListener("click", () => {
  const id = controller.state.sessionId;
  if (id === null) {
    return;
  }
  const reference = controller.state.selection.reference;
  void client
    .saveReport(id, reference ?? undefined)
    .then((doc) => {
      noticeLine.hidden = false;
      noticeLine.textContent = `report written to ${doc.path}`;
    })
    .catch((err) => {
      noticeLine.hidden = false;
      noticeLine.textContent = String(err);
    });
});

// pan with drag, zoom with wheel, select with a motionless click
let dragging = false;
let moved = false;
let last = { x: 0, y: 0 };

canvas.addEventListener("pointerdown", (ev) => {
  dragging = true;
  moved = false;
  last = { x: ev.clientX, y: ev.clientY };
  canvas.setPointerCapture(ev.pointerId);
});
canvas.addEventListener("pointermove", (ev) => {
  if (!dragging) {
    return;
  }
  const dx = ev.clientX - last.x;
  const dy = ev.clientY - last.y;
  if (Math.abs(dx) + Math.abs(dy) > 3) {
    moved = true;
  }
  if (moved) {
    pan = { x: pan.x + dx, y: pan.y + dy };
    last = { x: ev.clientX, y: ev.clientY };
    draw(controller.state);
  }
});
canvas.addEventListener("pointerup", (ev) => {
  dragging = false;
  if (!moved) {
    void controller.click(toImagePoint(ev));
  }
});
canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  const factor = ev.deltaY < 0 ? 1.1 : 1 / 1.1;
  const rect = canvas.getBoundingClientRect();
  const sx = ev.clientX - rect.left;
  const sy = ev.clientY - rect.top;
  // keep the pixel under the cursor fixed while scaling
  pan = {
    x: sx - (sx - pan.x) * factor,
    y: sy - (sy - pan.y) * factor,
  };
  scale *= factor;
  draw(controller.state);
});

render(controller.state);
