// View model -> HTML string. Pure: given the same projection, the markup is
// byte-identical, which is what the golden snapshot test pins down.

import type { BoardVM, CardVM, ViewModel } from "./projection.js";
import { activeTotal, marksOf, principleUsageCount, wipFull } from "./projection.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function renderCard(vm: ViewModel, card: CardVM, dragDisabled: boolean): string {
  const badges = marksOf(vm, card.id)
    .map((other) => `<span class="badge mark" data-peer="${other}">${other}</span>`)
    .join("");
  const chips =
    card.kind === "xtag"
      ? (vm.links.get(card.id) ?? [])
          .map((pid) => `<span class="chip principle" data-principle="${pid}">${pid}</span>`)
          .join("")
      : "";
  const origin =
    card.kind === "change_task" && card.originXtag
      ? `<span class="badge origin" data-origin="${card.originXtag}">from ${card.originXtag}</span>`
      : "";
  const draggable = dragDisabled ? "false" : "true";
  return (
    `<li class="card ${card.kind}" data-card="${card.id}" draggable="${draggable}">` +
    `<span class="card-id">${card.id}</span>` +
    `<span class="title">${escapeHtml(card.title)}</span>` +
    `<span class="badges">${badges}${origin}${chips}</span>` +
    `</li>`
  );
}

function renderBoard(vm: ViewModel, board: BoardVM, full: boolean): string {
  const principles = board.isDev
    ? ""
    : `<ul class="principles">` +
      board.principles
        .map(
          (p) =>
            `<li class="principle${p.retired ? " retired" : ""}" data-principle="${p.id}">` +
            `<span class="pid">${p.id}</span> v${p.version} ` +
            `<span class="statement">${escapeHtml(p.statement)}</span>` +
            `<span class="usage">${principleUsageCount(vm, p.id)} tags</span>` +
            `</li>`,
        )
        .join("") +
      `</ul>`;
  const columns = board.columns
    .map((col) => {
      // a full shared gauge disables dragging anything INTO an active column
      const blocked = full && col.stage === "active" ? " drop-blocked" : "";
      const cards = col.cards
        .map((cid) => {
          const card = vm.cards.get(cid)!;
          const dragDisabled = col.stage === "done"; // done is terminal
          return renderCard(vm, card, dragDisabled);
        })
        .join("");
      return (
        `<div class="column${blocked}" data-board="${board.id}" data-column="${col.name}" ` +
        `data-stage="${col.stage}">` +
        `<h3>${escapeHtml(col.name)} <span class="count">${col.cards.length}</span></h3>` +
        `<ul class="cards">${cards}</ul>` +
        `</div>`
      );
    })
    .join("");
  const flavor = board.isDev ? "dev" : "focus";
  const label = board.isDev ? escapeHtml(board.name) : `${escapeHtml(board.name)} (focus)`;
  return (
    `<details class="board ${flavor}" data-board="${board.id}" open>` +
    `<summary>${label}</summary>` +
    principles +
    `<div class="columns">${columns}</div>` +
    `</details>`
  );
}

export function renderWorkspace(vm: ViewModel): string {
  const active = activeTotal(vm);
  const full = wipFull(vm);
  const gauge =
    `<div class="wip-gauge${full ? " full" : ""}" data-active="${active}" ` +
    `data-limit="${vm.sharedLimit}">WIP ${active}/${vm.sharedLimit}</div>`;
  const boards = vm.boards.map((b) => renderBoard(vm, b, full)).join("");
  return (
    `<div class="workspace" data-workspace="${vm.workspaceId}" data-clock="${vm.clock}">` +
    `<header><h1>${escapeHtml(vm.name)}</h1>${gauge}` +
    `<span class="policy">${vm.completionPolicy}</span></header>` +
    `<main class="boards">${boards}</main>` +
    `</div>`
  );
}

export function renderToast(message: string | null): string {
  if (!message) return "";
  return `<div class="toast" role="alert">${escapeHtml(message)}</div>`;
}
