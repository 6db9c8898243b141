// UI behavior without the DOM: drags become commands, rejections become
// toasts, dialogs gate their submits. No optimistic updates anywhere; the
// projection only changes when a streamed event lands (onEvent).

import type { ApiClient } from "./api.js";
import type { ViewModel } from "./projection.js";
import { applyEvent } from "./projection.js";
import type { EventRecord } from "./types.js";

export interface ExtractDialog {
  kind: "extract";
  taskId: string;
  focusId: string;
  title: string;
  selected: string[]; // principle ids
}

export interface CompleteDialog {
  kind: "complete";
  xtagId: string;
  specs: { title: string; description: string }[];
}

export type Dialog = ExtractDialog | CompleteDialog | null;

export interface UiState {
  vm: ViewModel | null;
  toast: string | null;
  dialog: Dialog;
  connected: boolean;
  lastSeq: number;
}

export function initialState(): UiState {
  return { vm: null, toast: null, dialog: null, connected: false, lastSeq: 0 };
}

export function onEvent(state: UiState, ev: EventRecord): void {
  if (!state.vm) return;
  applyEvent(state.vm, ev);
  state.lastSeq = ev.seq;
}

function stageOf(vm: ViewModel, cardId: string): "queue" | "active" | "done" {
  for (const b of vm.boards) {
    for (const col of b.columns) {
      if (col.cards.includes(cardId)) return col.stage;
    }
  }
  throw new Error(`card ${cardId} is on no board`);
}

/** The command a drop translates to; null means the drop opens a dialog or
 * is a no-op. Dragging a queued dev task into active uses start_task so the
 * co-start of its tags stays atomic on the server. */
export function dropCommand(
  vm: ViewModel,
  cardId: string,
  targetColumn: string,
): Record<string, unknown> | null {
  const card = vm.cards.get(cardId);
  if (!card) return null;
  const target = vm.boards
    .flatMap((b) => b.columns)
    .find((c) => c.name === targetColumn);
  if (card.kind === "xtag" && target?.stage === "done") {
    return null; // blocked affordance: route to the complete-xtag dialog
  }
  if (
    card.kind !== "xtag" &&
    target?.stage === "active" &&
    stageOf(vm, cardId) === "queue" &&
    targetColumn === "In Progress"
  ) {
    return { kind: "start_task", task_id: cardId };
  }
  return { kind: "move_card", card_id: cardId, target_column: targetColumn };
}

/** Issues the drop's command. On rejection the card simply never moves
 * (projection-only rendering IS the snap-back) and the rule is surfaced. */
export async function handleDrop(
  state: UiState,
  api: ApiClient,
  cardId: string,
  targetColumn: string,
): Promise<void> {
  if (!state.vm) return;
  const command = dropCommand(state.vm, cardId, targetColumn);
  if (command === null) {
    const card = state.vm.cards.get(cardId);
    if (card?.kind === "xtag") openCompleteDialog(state, cardId);
    return;
  }
  const response = await api.command(command);
  if (response.status !== 200) {
    state.toast = response.body.rule ?? `error ${response.status}`;
  } else {
    state.toast = null;
    for (const warning of response.body.warnings ?? []) state.toast = warning;
  }
}

// -- extract dialog ----------------------------------------------------------

export function openExtractDialog(state: UiState, taskId: string, focusId: string): void {
  state.dialog = { kind: "extract", taskId, focusId, title: "", selected: [] };
}

export function togglePrinciple(dialog: ExtractDialog, pid: string): void {
  const at = dialog.selected.indexOf(pid);
  if (at >= 0) dialog.selected.splice(at, 1);
  else dialog.selected.push(pid);
}

/** Submit stays disabled until at least one principle is selected. */
export function extractSubmitEnabled(dialog: ExtractDialog): boolean {
  return dialog.selected.length > 0 && dialog.title.trim().length > 0;
}

export async function submitExtract(state: UiState, api: ApiClient): Promise<void> {
  const dialog = state.dialog;
  if (!dialog || dialog.kind !== "extract" || !extractSubmitEnabled(dialog)) return;
  const response = await api.command({
    kind: "extract_xtag",
    task_id: dialog.taskId,
    focus_id: dialog.focusId,
    title: dialog.title,
    principle_ids: dialog.selected,
  });
  if (response.status !== 200) {
    state.toast = response.body.rule ?? `error ${response.status}`;
  } else {
    state.dialog = null;
  }
}

// -- complete-xtag dialog -------------------------------------------------------

export function openCompleteDialog(state: UiState, xtagId: string): void {
  state.dialog = { kind: "complete", xtagId, specs: [] };
}

export function addChangeSpec(dialog: CompleteDialog, title: string, description = ""): void {
  dialog.specs.push({ title, description });
}

export function completePreview(dialog: CompleteDialog): string {
  if (dialog.specs.length === 0) return "no change tasks will be created";
  const noun = dialog.specs.length === 1 ? "change task" : "change tasks";
  return `${dialog.specs.length} ${noun} will be inserted at the front of the backlog`;
}

export async function submitComplete(state: UiState, api: ApiClient): Promise<void> {
  const dialog = state.dialog;
  if (!dialog || dialog.kind !== "complete") return;
  const response = await api.command({
    kind: "complete_xtag",
    xtag_id: dialog.xtagId,
    change_specs: dialog.specs,
  });
  if (response.status !== 200) {
    state.toast = response.body.rule ?? `error ${response.status}`;
  } else {
    state.dialog = null;
  }
}

// -- principle panel ---------------------------------------------------------------

export async function revisePrinciple(
  state: UiState,
  api: ApiClient,
  pid: string,
  statement: string,
): Promise<void> {
  const response = await api.command({
    kind: "revise_principle",
    principle_id: pid,
    statement,
  });
  if (response.status !== 200) state.toast = response.body.rule ?? "error";
}

export async function retirePrinciple(state: UiState, api: ApiClient, pid: string): Promise<void> {
  const response = await api.command({ kind: "retire_principle", principle_id: pid });
  if (response.status !== 200) state.toast = response.body.rule ?? "error";
}
