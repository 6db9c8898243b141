// Browser bootstrap: fetch the snapshot, subscribe to the stream, wire the
// drag-and-drop and dialogs. All truth lives in the projection; this file is
// DOM glue only.

import { ApiClient } from "./api.js";
import * as controller from "./controller.js";
import { initViewModel } from "./projection.js";
import { renderToast, renderWorkspace } from "./render.js";
import { subscribe } from "./sse.js";

const query = new URLSearchParams(location.search);
const base = query.get("api") ?? "";
const workspaceId = query.get("workspace") ?? "";

const root = document.getElementById("app")!;
const state = controller.initialState();
let api: ApiClient;

function draw(): void {
  if (!state.vm) {
    root.innerHTML = `<p class="hint">Pass ?workspace=&lt;id&gt; in the URL ` +
      `(and optionally ?api=http://host:port for a remote service).</p>`;
    return;
  }
  const banner = state.connected
    ? ""
    : `<div class="banner offline">connection lost, retrying from seq ${state.lastSeq}</div>`;
  root.innerHTML =
    banner + renderWorkspace(state.vm) + renderDialog() + renderToast(state.toast);
}

function renderDialog(): string {
  const dialog = state.dialog;
  if (!dialog) return "";
  if (dialog.kind === "extract") {
    const focus = state.vm!.boards.find((b) => b.id === dialog.focusId);
    const checks = (focus?.principles ?? [])
      .filter((p) => !p.retired)
      .map(
        (p) =>
          `<label><input type="checkbox" data-principle="${p.id}" ` +
          `${dialog.selected.includes(p.id) ? "checked" : ""}> ${p.id} ${p.statement}</label>`,
      )
      .join("");
    const enabled = controller.extractSubmitEnabled(dialog);
    return (
      `<div class="dialog extract"><h2>Extract tag from ${dialog.taskId}</h2>` +
      `<input type="text" id="extract-title" placeholder="concern title" ` +
      `value="${dialog.title.replace(/"/g, "&quot;")}">` +
      `<div class="principles">${checks}</div>` +
      `<button id="extract-submit" ${enabled ? "" : "disabled"}>Extract</button>` +
      `<button data-action="close-dialog">Cancel</button></div>`
    );
  }
  const preview = controller.completePreview(dialog);
  const specs = dialog.specs
    .map((s, i) => `<li>${i + 1}. ${s.title}</li>`)
    .join("");
  return (
    `<div class="dialog complete"><h2>Complete ${dialog.xtagId}</h2>` +
    `<ul class="specs">${specs}</ul>` +
    `<input type="text" id="spec-title" placeholder="needed change">` +
    `<button id="spec-add">Add change</button>` +
    `<p class="preview">${preview}</p>` +
    `<button id="complete-submit">Complete tag</button>` +
    `<button data-action="close-dialog">Cancel</button></div>`
  );
}

function wire(): void {
  root.addEventListener("dragstart", (ev) => {
    const card = (ev.target as HTMLElement).closest<HTMLElement>(".card");
    if (card && ev instanceof DragEvent && ev.dataTransfer) {
      ev.dataTransfer.setData("text/card", card.dataset.card!);
    }
  });
  root.addEventListener("dragover", (ev) => {
    if ((ev.target as HTMLElement).closest(".column")) ev.preventDefault();
  });
  root.addEventListener("drop", (ev) => {
    const column = (ev.target as HTMLElement).closest<HTMLElement>(".column");
    if (!column || !(ev instanceof DragEvent) || !ev.dataTransfer) return;
    ev.preventDefault();
    const cardId = ev.dataTransfer.getData("text/card");
    if (cardId) {
      void controller.handleDrop(state, api, cardId, column.dataset.column!).then(draw);
    }
  });
  root.addEventListener("dblclick", (ev) => {
    const card = (ev.target as HTMLElement).closest<HTMLElement>(".card");
    if (!card || !state.vm) return;
    const vmCard = state.vm.cards.get(card.dataset.card!);
    if (vmCard && vmCard.kind === "xtag") {
      controller.openCompleteDialog(state, vmCard.id);
    } else if (vmCard) {
      const focus = state.vm.boards.find((b) => !b.isDev);
      if (focus) controller.openExtractDialog(state, vmCard.id, focus.id);
    }
    draw();
  });
  root.addEventListener("click", (ev) => {
    const el = ev.target as HTMLElement;
    if (el.dataset.action === "close-dialog") {
      state.dialog = null;
      draw();
    } else if (el.id === "extract-submit") {
      void controller.submitExtract(state, api).then(draw);
    } else if (el.id === "complete-submit") {
      void controller.submitComplete(state, api).then(draw);
    } else if (el.id === "spec-add") {
      const input = document.getElementById("spec-title") as HTMLInputElement;
      if (state.dialog?.kind === "complete" && input.value.trim()) {
        controller.addChangeSpec(state.dialog, input.value.trim());
        draw();
      }
    }
  });
  root.addEventListener("change", (ev) => {
    const el = ev.target as HTMLInputElement;
    if (el.dataset.principle && state.dialog?.kind === "extract") {
      controller.togglePrinciple(state.dialog, el.dataset.principle);
      draw();
    }
  });
  root.addEventListener("input", (ev) => {
    const el = ev.target as HTMLInputElement;
    if (el.id === "extract-title" && state.dialog?.kind === "extract") {
      state.dialog.title = el.value;
      const submit = document.getElementById("extract-submit") as HTMLButtonElement | null;
      if (submit) submit.disabled = !controller.extractSubmitEnabled(state.dialog);
    }
  });
}

async function boot(): Promise<void> {
  draw();
  if (!workspaceId) return;
  api = new ApiClient(base, workspaceId);
  const snapshot = await api.snapshot();
  state.vm = initViewModel(snapshot);
  state.lastSeq = snapshot.clock;
  state.connected = true;
  wire();
  draw();
  subscribe(
    api.eventsUrl,
    state.lastSeq,
    (record) => {
      controller.onEvent(state, record);
      draw();
    },
    (connected) => {
      state.connected = connected;
      draw();
    },
  );
}

void boot();
