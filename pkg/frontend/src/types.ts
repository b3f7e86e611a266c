// Document shapes of the /v1 API. These mirror the service responses
// exactly; the UI never derives or recomputes any number in them.

export type Stage =
  | "CompanyDetection"
  | "Relevance"
  | "DomainClassification"
  | "Sentiment";

export const STAGES: Stage[] = [
  "CompanyDetection",
  "Relevance",
  "DomainClassification",
  "Sentiment",
];

// Labels a reviewer may assign per stage. Detection corrections can only
// clear false positives; the service rejects forced new mentions.
export const CORRECTABLE_LABELS: Record<Stage, string[]> = {
  CompanyDetection: ["not_mentioned"],
  Relevance: ["relevant", "irrelevant"],
  DomainClassification: ["Environmental", "Social", "Governance"],
  Sentiment: ["negative", "neutral", "positive"],
};

export const DOMAIN_NAMES = ["Environmental", "Social", "Governance"] as const;

export interface DomainScore {
  score: number;
  n_negative: number;
  n_neutral: number;
  n_positive: number;
}

export interface ScoreDocument {
  company: string;
  domains: Record<string, DomainScore>;
  headline_count: number;
  n_scored: number;
  n_irrelevant: number;
  n_no_company: number;
  last_updated: string | null;
}

export interface CorrectionInfo {
  label: string;
  author: string;
  timestamp: string;
}

export interface OutcomeDocument {
  stage: Stage;
  predicted: string;
  probabilities: Record<string, number>;
  correction: CorrectionInfo | null;
}

export interface ResultDocument {
  headline_id: string;
  company: string | null;
  terminal: { kind: string; domain: string | null; sentiment: string | null };
  outcomes: OutcomeDocument[];
  text: string;
}

export interface HeadlinePage {
  company: string;
  items: ResultDocument[];
  page: number;
  page_size: number;
  total: number;
}

export interface CorrectionEventDocument {
  event_id: number;
  headline_id: string;
  stage: Stage;
  old_label: string;
  new_label: string;
  author: string;
  timestamp: string;
}

export interface CorrectionResponse {
  event: CorrectionEventDocument;
  result: ResultDocument;
  score: ScoreDocument;
}

export interface ErrorDocument {
  code: string;
  message: string;
  suggestions?: string[];
}

export interface HealthDocument {
  status: string;
  model_versions: Record<string, string>;
  store: { headlines: number; corrections: number; companies: number };
}

export interface IngestReport {
  accepted: number;
  rejected: { line: number; id?: string; reason: string }[];
}

export function effectiveLabel(outcome: OutcomeDocument): string {
  return outcome.correction ? outcome.correction.label : outcome.predicted;
}
