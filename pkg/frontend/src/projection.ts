// The client-side fold: view state is a pure projection of the latest server
// snapshot plus the streamed events, nothing else. The UI never invents a
// state; a drag only looks "moved" once the confirming event arrives here.

import type { CardKind, EventRecord, Stage, WorkspaceSnapshot } from "./types.js";

export interface CardVM {
  id: string;
  kind: CardKind;
  title: string;
  description: string;
  focusId: string | null;
  originXtag: string | null;
  createdAt: number;
  startedAt: number | null;
  doneAt: number | null;
}

export interface ColumnVM {
  name: string;
  stage: Stage;
  cards: string[]; // ordered, index 0 = front
}

export interface PrincipleVM {
  id: string;
  statement: string;
  version: number;
  retired: boolean;
}

export interface BoardVM {
  id: string;
  name: string;
  isDev: boolean;
  focusName: string | null;
  columns: ColumnVM[];
  principles: PrincipleVM[];
}

export interface ViewModel {
  workspaceId: string;
  name: string;
  clock: number;
  sharedLimit: number;
  perBoardLimits: Record<string, number>;
  completionPolicy: string;
  boards: BoardVM[]; // dev board first, focus boards stacked below in order
  cards: Map<string, CardVM>;
  marks: { devCard: string; xtag: string }[];
  links: Map<string, string[]>; // xtag id -> principle ids
}

const DEFAULT_COLUMNS: [string, Stage][] = [
  ["Backlog", "queue"],
  ["In Progress", "active"],
  ["Done", "done"],
];

export function initViewModel(snapshot: WorkspaceSnapshot): ViewModel {
  const vm: ViewModel = {
    workspaceId: snapshot.id,
    name: snapshot.name,
    clock: snapshot.clock,
    sharedLimit: snapshot.wip_policy.shared_limit,
    perBoardLimits: { ...snapshot.wip_policy.per_board_limits },
    completionPolicy: snapshot.completion_policy,
    boards: [],
    cards: new Map(),
    marks: snapshot.marks.map((m) => ({ devCard: m.dev_card, xtag: m.xtag })),
    links: new Map(),
  };
  for (const board of snapshot.boards) {
    const boardVM: BoardVM = {
      id: board.id,
      name: board.name,
      isDev: board.type === "dev",
      focusName: board.focus_name,
      columns: [],
      principles: board.principles.map((p) => ({ ...p })),
    };
    for (const column of board.columns) {
      boardVM.columns.push({
        name: column.name,
        stage: column.stage,
        cards: column.cards.map((c) => c.id),
      });
      for (const card of column.cards) {
        vm.cards.set(card.id, {
          id: card.id,
          kind: card.kind,
          title: card.title,
          description: card.description,
          focusId: card.focus_id,
          originXtag: card.origin_xtag,
          createdAt: card.created_at,
          startedAt: card.started_at,
          doneAt: card.done_at,
        });
        if (card.kind === "xtag") vm.links.set(card.id, [...card.principles]);
      }
    }
    vm.boards.push(boardVM);
  }
  return vm;
}

function board(vm: ViewModel, boardId: string): BoardVM {
  const found = vm.boards.find((b) => b.id === boardId);
  if (!found) throw new Error(`unknown board ${boardId}`);
  return found;
}

function columnHolding(vm: ViewModel, cardId: string): [BoardVM, ColumnVM] {
  for (const b of vm.boards) {
    for (const col of b.columns) {
      if (col.cards.includes(cardId)) return [b, col];
    }
  }
  throw new Error(`card ${cardId} is on no board`);
}

export function activeTotal(vm: ViewModel): number {
  let total = 0;
  for (const b of vm.boards) {
    for (const col of b.columns) {
      if (col.stage === "active") total += col.cards.length;
    }
  }
  return total;
}

export function wipFull(vm: ViewModel): boolean {
  return activeTotal(vm) >= vm.sharedLimit;
}

// Applies one streamed event in place and advances the clock. The server has
// already validated everything; unknown kinds are a contract violation.
export function applyEvent(vm: ViewModel, ev: EventRecord): ViewModel {
  const p = ev.payload as Record<string, any>;
  switch (ev.kind) {
    case "card_created": {
      const card: CardVM = {
        id: p.card_id,
        kind: p.kind,
        title: p.title,
        description: p.description ?? "",
        focusId: p.focus_id ?? null,
        originXtag: p.origin_xtag ?? null,
        createdAt: ev.seq,
        startedAt: null,
        doneAt: null,
      };
      vm.cards.set(card.id, card);
      const b = board(vm, p.board_id);
      const col = b.columns.find((c) => c.name === p.column);
      if (!col) throw new Error(`unknown column ${p.column}`);
      const at = Math.max(0, Math.min(p.position ?? col.cards.length, col.cards.length));
      col.cards.splice(at, 0, card.id);
      if (card.kind === "xtag") vm.links.set(card.id, [...(p.principle_ids ?? [])]);
      break;
    }
    case "card_moved": {
      const [b, src] = columnHolding(vm, p.card_id);
      const dst = b.columns.find((c) => c.name === p.to_column);
      if (!dst) throw new Error(`unknown column ${p.to_column}`);
      src.cards.splice(src.cards.indexOf(p.card_id), 1);
      dst.cards.push(p.card_id);
      const card = vm.cards.get(p.card_id)!;
      if (dst.stage === "active" && card.startedAt === null) card.startedAt = ev.seq;
      if (dst.stage === "done" && card.doneAt === null) card.doneAt = ev.seq;
      break;
    }
    case "mark_added":
      vm.marks.push({ devCard: p.dev_card, xtag: p.xtag });
      break;
    case "mark_removed":
      vm.marks = vm.marks.filter((m) => !(m.devCard === p.dev_card && m.xtag === p.xtag));
      break;
    case "focus_added":
      vm.boards.push({
        id: p.board_id,
        name: p.focus_name,
        isDev: false,
        focusName: p.focus_name,
        columns: DEFAULT_COLUMNS.map(([name, stage]) => ({ name, stage, cards: [] })),
        principles: [],
      });
      break;
    case "principle_added":
      board(vm, p.focus_id).principles.push({
        id: p.principle_id,
        statement: p.statement,
        version: 1,
        retired: false,
      });
      break;
    case "principle_revised": {
      const principle = findPrinciple(vm, p.principle_id);
      principle.statement = p.statement;
      principle.version += 1;
      break;
    }
    case "principle_retired":
      findPrinciple(vm, p.principle_id).retired = true;
      break;
    case "policy_changed":
      if (p.shared_limit != null) vm.sharedLimit = p.shared_limit;
      if (p.per_board_limits != null) vm.perBoardLimits = { ...p.per_board_limits };
      if (p.completion_policy) vm.completionPolicy = p.completion_policy;
      break;
    case "workspace_created":
      break; // genesis header; streams start after it
    default:
      throw new Error(`unknown event kind ${ev.kind}`);
  }
  vm.clock = ev.seq;
  return vm;
}

export function project(snapshot: WorkspaceSnapshot, events: EventRecord[]): ViewModel {
  const vm = initViewModel(snapshot);
  for (const ev of events) {
    if (ev.seq <= vm.clock) continue; // stream overlap after resume
    applyEvent(vm, ev);
  }
  return vm;
}

function findPrinciple(vm: ViewModel, pid: string): PrincipleVM {
  for (const b of vm.boards) {
    const principle = b.principles.find((p) => p.id === pid);
    if (principle) return principle;
  }
  throw new Error(`unknown principle ${pid}`);
}

export function marksOf(vm: ViewModel, cardId: string): string[] {
  const out: string[] = [];
  for (const m of vm.marks) {
    if (m.devCard === cardId) out.push(m.xtag);
    if (m.xtag === cardId) out.push(m.devCard);
  }
  return out;
}

export function principleUsageCount(vm: ViewModel, pid: string): number {
  let n = 0;
  for (const linked of vm.links.values()) {
    if (linked.includes(pid)) n += 1;
  }
  return n;
}
