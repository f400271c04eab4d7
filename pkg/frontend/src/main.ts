// Browser wiring: study/phase selection, canvas rendering, scanline
// editing, M-mode panel and measurement readouts. All measurement math
// happens server-side; this file only moves values between the API and
// the DOM.

import { ApiClient, ApiError, RequestCancelled } from "./api.js";
import { drawOverlays, pickHandle } from "./overlays.js";
import {
  applySession,
  beginEdit,
  clearSession,
  endEdit,
  initialState,
  measurementRows,
  moveEdit,
  restoreLastValid,
  toggleOverlay,
  type OverlayToggles,
  type ViewState,
} from "./state.js";
import { fitTransform, screenToImage, type ViewTransform } from "./transform.js";
import type { Phase, StudySummary } from "./types.js";

const api = new ApiClient("");
let state: ViewState = initialState();
let studies: StudySummary[] = [];
let zoom = 1;
let frameImage: HTMLImageElement | null = null;

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

const canvas = $("frame-canvas") as unknown as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;

function currentStudy(): StudySummary | undefined {
  return studies.find((s) => s.study_id === state.studyId);
}

function transform(): ViewTransform {
  const study = currentStudy();
  const width = study ? study.width : canvas.width;
  const height = study ? study.height : canvas.height;
  return fitTransform(width, height, canvas.width, canvas.height, zoom);
}

function render(): void {
  ctx.fillStyle = "#0b0e14";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const t = transform();
  const study = currentStudy();
  if (frameImage && study) {
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(
      frameImage,
      t.offsetX,
      t.offsetY,
      study.width * t.scale,
      study.height * t.scale,
    );
  }
  drawOverlays(
    ctx,
    state.session,
    state.scanline,
    state.overlays,
    t,
    state.session?.manual_override ?? false,
  );

  for (const row of measurementRows(state.measurements)) {
    $(`meas-${row.label.toLowerCase()}`).textContent = row.text;
  }
  $("badge-manual").hidden = !(state.session?.manual_override ?? false);
  $("badge-reviewed").hidden = !(state.session?.accepted ?? false);
  $("status").textContent = state.error ?? (state.pending ? "measuring…" : "");
  const amm = $("amm-image") as HTMLImageElement;
  if (state.session && state.studyId) {
    amm.src = api.ammUrl(state.studyId, state.phase, state.ammRevision);
    amm.hidden = false;
  } else {
    amm.hidden = true;
  }
}

async function loadFrame(): Promise<void> {
  const study = currentStudy();
  if (!study || !state.studyId) {
    frameImage = null;
    return;
  }
  const anchor = state.phase === "ED" ? study.anchor_ed : study.anchor_es;
  if (anchor === null) {
    frameImage = null;
    return;
  }
  const image = new Image();
  image.src = api.frameUrl(state.studyId, anchor);
  await image.decode().catch(() => undefined);
  frameImage = image;
}

async function selectStudy(studyId: string, phase: Phase): Promise<void> {
  state = { ...clearSession(state), studyId, phase };
  await loadFrame();
  const existing = await api.getSession(studyId, phase).catch(() => null);
  if (existing) state = applySession(state, existing);
  render();
}

async function runAuto(): Promise<void> {
  const studyId = state.studyId;
  if (!studyId) return;
  state = { ...state, pending: true, error: null };
  render();
  try {
    state = applySession(state, await api.runAuto(studyId, state.phase));
  } catch (err) {
    state = restoreLastValid(state, describe(err));
  }
  render();
}

async function acceptResult(): Promise<void> {
  if (!state.studyId || !state.session) return;
  try {
    state = applySession(state, await api.accept(state.studyId, state.phase));
    await refreshStudies();
  } catch (err) {
    state = restoreLastValid(state, describe(err));
  }
  render();
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  if (err instanceof Error) return `server unreachable (${err.message}); edit rejected`;
  return String(err);
}

async function commitScanline(): Promise<void> {
  if (!state.studyId || !state.scanline) return;
  try {
    const view = await api.putScanline(state.studyId, state.phase, state.scanline);
    state = applySession(state, view);
  } catch (err) {
    if (err instanceof RequestCancelled) return; // a newer edit superseded this one
    state = restoreLastValid(state, describe(err));
  }
  render();
}

function pointerPosition(event: MouseEvent): { x: number; y: number } {
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((event.clientX - rect.left) / rect.width) * canvas.width,
    y: ((event.clientY - rect.top) / rect.height) * canvas.height,
  };
}

function wireCanvas(): void {
  canvas.addEventListener("mousedown", (event) => {
    const pointer = pointerPosition(event);
    const handle = pickHandle(pointer, state.scanline, transform());
    if (!handle) return;
    state = beginEdit(state, handle, screenToImage(pointer, transform()));
    render();
  });
  canvas.addEventListener("mousemove", (event) => {
    if (!state.edit) return;
    const pointer = screenToImage(pointerPosition(event), transform());
    state = moveEdit(state, pointer);
    render();
  });
  const finish = () => {
    if (!state.edit) return;
    const outcome = endEdit(state);
    state = outcome.state;
    render();
    if (outcome.changed) void commitScanline();
  };
  canvas.addEventListener("mouseup", finish);
  canvas.addEventListener("mouseleave", finish);
}

async function refreshStudies(): Promise<void> {
  studies = await api.listStudies();
  const select = $("study-select") as HTMLSelectElement;
  const previous = select.value;
  select.innerHTML = "";
  for (const study of studies) {
    const option = document.createElement("option");
    option.value = study.study_id;
    const reviewed = Object.entries(study.reviewed)
      .filter(([, done]) => done)
      .map(([phase]) => phase)
      .join("+");
    option.textContent = reviewed
      ? `${study.study_id} (reviewed ${reviewed})`
      : study.study_id;
    select.appendChild(option);
  }
  if (previous) select.value = previous;
}

function wireControls(): void {
  const select = $("study-select") as HTMLSelectElement;
  select.addEventListener("change", () => void selectStudy(select.value, state.phase));
  for (const phase of ["ED", "ES"] as Phase[]) {
    $(`phase-${phase.toLowerCase()}`).addEventListener("click", () => {
      if (state.studyId) void selectStudy(state.studyId, phase);
    });
  }
  $("run-auto").addEventListener("click", () => void runAuto());
  $("accept").addEventListener("click", () => void acceptResult());
  for (const key of ["contour", "axis", "scanline", "landmarks"] as Array<
    keyof OverlayToggles
  >) {
    const box = $(`toggle-${key}`) as HTMLInputElement;
    box.addEventListener("change", () => {
      state = toggleOverlay(state, key);
      render();
    });
  }
  const zoomInput = $("zoom") as HTMLInputElement;
  zoomInput.addEventListener("input", () => {
    zoom = Number(zoomInput.value);
    render();
  });
}

async function start(): Promise<void> {
  wireControls();
  wireCanvas();
  await refreshStudies();
  if (studies.length > 0) await selectStudy(studies[0].study_id, "ED");
  render();
}

void start();
