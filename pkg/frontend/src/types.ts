// Wire formats of the board service. Field names mirror the server's JSON
// bodies exactly; the view model in projection.ts is derived from these.

export type Stage = "queue" | "active" | "done";
export type CardKind = "task" | "xtag" | "change_task";
export type CompletionPolicy = "strict" | "warn";

export interface EventRecord {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
  wall_time?: string | null;
}

export interface CardView {
  id: string;
  kind: CardKind;
  title: string;
  description: string;
  focus_id: string | null;
  origin_xtag: string | null;
  created_at: number;
  started_at: number | null;
  done_at: number | null;
  marks: string[];
  principles: string[];
}

export interface ColumnView {
  name: string;
  stage: Stage;
  cards: CardView[];
}

export interface PrincipleView {
  id: string;
  statement: string;
  version: number;
  retired: boolean;
}

export interface BoardView {
  id: string;
  name: string;
  type: "dev" | "focus";
  focus_name: string | null;
  columns: ColumnView[];
  principles: PrincipleView[];
}

export interface MarkView {
  dev_card: string;
  xtag: string;
  created_at: number;
  note: string | null;
}

export interface WorkspaceSnapshot {
  id: string;
  name: string;
  clock: number;
  completion_policy: CompletionPolicy;
  wip_policy: { shared_limit: number; per_board_limits: Record<string, number> };
  active_total: number;
  boards: BoardView[];
  marks: MarkView[];
}

export interface CommandResponse {
  status: number;
  body: {
    accepted?: boolean;
    clock?: number;
    events?: EventRecord[];
    warnings?: string[];
    rule?: string;
    message?: string;
  };
}
