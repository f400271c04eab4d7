// View state and scanline edit gestures, kept pure for testability.
//
// Geometry edits are optimistic (the overlay follows the pointer) but
// measurements are pessimistic: they are blanked the moment an edit is
// committed and only repopulated from the server response, so the panel
// never shows a number the pipeline did not produce.

import type { Measurements, Phase, Scanline, SessionView, XY } from "./types.js";
import { fromJsonScanline } from "./types.js";

export type Handle = "p1" | "p2" | "mid" | "rotate";

export interface OverlayToggles {
  contour: boolean;
  axis: boolean;
  scanline: boolean;
  landmarks: boolean;
}

export interface EditState {
  handle: Handle;
  startPointer: XY;
  original: Scanline;
}

export interface ViewState {
  studyId: string | null;
  phase: Phase;
  session: SessionView | null;
  scanline: Scanline | null;
  measurements: Measurements | null;
  overlays: OverlayToggles;
  edit: EditState | null;
  error: string | null;
  pending: boolean;
  ammRevision: number;
}

export function initialState(): ViewState {
  return {
    studyId: null,
    phase: "ED",
    session: null,
    scanline: null,
    measurements: null,
    overlays: { contour: true, axis: true, scanline: true, landmarks: true },
    edit: null,
    error: null,
    pending: false,
    ammRevision: 0,
  };
}

/** Install a fresh server response; every displayed value comes from it. */
export function applySession(state: ViewState, view: SessionView): ViewState {
  return {
    ...state,
    studyId: view.study_id,
    phase: view.phase as Phase,
    session: view,
    scanline: fromJsonScanline(view.scanline),
    measurements: view.measurements,
    edit: null,
    error: null,
    pending: false,
    ammRevision: state.ammRevision + 1,
  };
}

export function clearSession(state: ViewState): ViewState {
  return {
    ...state,
    session: null,
    scanline: null,
    measurements: null,
    edit: null,
    error: null,
    pending: false,
  };
}

export function beginEdit(state: ViewState, handle: Handle, pointer: XY): ViewState {
  if (!state.scanline) return state;
  return {
    ...state,
    edit: { handle, startPointer: pointer, original: state.scanline },
    error: null,
  };
}

function translate(sl: Scanline, dx: number, dy: number): Scanline {
  return {
    p1: { x: sl.p1.x + dx, y: sl.p1.y + dy },
    p2: { x: sl.p2.x + dx, y: sl.p2.y + dy },
  };
}

export function midpoint(sl: Scanline): XY {
  return { x: (sl.p1.x + sl.p2.x) / 2, y: (sl.p1.y + sl.p2.y) / 2 };
}

export function rotateScanline(sl: Scanline, angleRad: number): Scanline {
  const c = Math.cos(angleRad);
  const s = Math.sin(angleRad);
  const m = midpoint(sl);
  const spin = (p: XY): XY => ({
    x: m.x + (p.x - m.x) * c - (p.y - m.y) * s,
    y: m.y + (p.x - m.x) * s + (p.y - m.y) * c,
  });
  return { p1: spin(sl.p1), p2: spin(sl.p2) };
}

/** Update the optimistic scanline geometry while a handle is dragged. */
export function moveEdit(state: ViewState, pointer: XY): ViewState {
  const edit = state.edit;
  if (!edit) return state;
  const dx = pointer.x - edit.startPointer.x;
  const dy = pointer.y - edit.startPointer.y;
  let scanline: Scanline;
  switch (edit.handle) {
    case "p1":
      scanline = { p1: { x: edit.original.p1.x + dx, y: edit.original.p1.y + dy }, p2: edit.original.p2 };
      break;
    case "p2":
      scanline = { p1: edit.original.p1, p2: { x: edit.original.p2.x + dx, y: edit.original.p2.y + dy } };
      break;
    case "mid":
      scanline = translate(edit.original, dx, dy);
      break;
    case "rotate": {
      const m = midpoint(edit.original);
      const before = Math.atan2(edit.startPointer.y - m.y, edit.startPointer.x - m.x);
      const after = Math.atan2(pointer.y - m.y, pointer.x - m.x);
      scanline = rotateScanline(edit.original, after - before);
      break;
    }
  }
  return { ...state, scanline };
}

function samePoint(a: XY, b: XY): boolean {
  return a.x === b.x && a.y === b.y;
}

export interface EditOutcome {
  state: ViewState;
  /** True when the released geometry differs from the last server scanline. */
  changed: boolean;
}

/** Finish a drag. If nothing moved, keep the current measurements;
 * otherwise blank them until the server responds. */
export function endEdit(state: ViewState): EditOutcome {
  if (!state.edit || !state.scanline || !state.session) {
    return { state: { ...state, edit: null }, changed: false };
  }
  const serverLine = fromJsonScanline(state.session.scanline);
  const changed =
    !samePoint(state.scanline.p1, serverLine.p1) ||
    !samePoint(state.scanline.p2, serverLine.p2);
  if (!changed) {
    return { state: { ...state, edit: null, scanline: serverLine }, changed };
  }
  return {
    state: { ...state, edit: null, measurements: null, pending: true },
    changed,
  };
}

/** Server rejected the edit (or was unreachable): restore the last valid
 * scanline and its measurements, and surface the reason. */
export function restoreLastValid(state: ViewState, message: string): ViewState {
  return {
    ...state,
    scanline: state.session ? fromJsonScanline(state.session.scanline) : null,
    measurements: state.session ? state.session.measurements : null,
    edit: null,
    error: message,
    pending: false,
  };
}

export function toggleOverlay(state: ViewState, key: keyof OverlayToggles): ViewState {
  return {
    ...state,
    overlays: { ...state.overlays, [key]: !state.overlays[key] },
  };
}

export interface MeasurementRow {
  label: string;
  text: string;
}

/** Rows for the measurement table: 2-decimal cm, blank while pending.
 * Values are rendered verbatim from the stored server response. */
export function measurementRows(measurements: Measurements | null): MeasurementRow[] {
  const fmt = (v: number | undefined): string =>
    v === undefined ? "—" : v.toFixed(2);
  return [
    { label: "IVS", text: measurements ? fmt(measurements.ivs_cm) : "—" },
    { label: "LVID", text: measurements ? fmt(measurements.lvid_cm) : "—" },
    { label: "LVPW", text: measurements ? fmt(measurements.lvpw_cm) : "—" },
  ];
}
