import type { HeadlinePage, ScoreDocument, Stage } from "./types";

export interface CorrectionDraft {
  stage: Stage;
  label: string;
}

// Drafts never touch displayed data; rows and the score panel only change
// when the service confirms a write.
export interface ViewState {
  company: string | null;
  score: ScoreDocument | null;
  page: HeadlinePage | null;
  stageFilter: Stage | null;
  labelFilter: string | null;
  pageNumber: number;
  pageSize: number;
  drafts: Map<string, CorrectionDraft>;
  rowErrors: Map<string, string>;
  globalError: string | null;
  suggestions: string[];
  author: string;
}

export function initialState(): ViewState {
  return {
    company: null,
    score: null,
    page: null,
    stageFilter: null,
    labelFilter: null,
    pageNumber: 1,
    pageSize: 20,
    drafts: new Map(),
    rowErrors: new Map(),
    globalError: null,
    suggestions: [],
    author: "reviewer",
  };
}
