/** Wire types of the portal JSON endpoints (the only API this console uses). */

export type Cell = number | string | null;

export interface ColumnDoc {
  name: string;
  kind: "int" | "float" | "text";
}

export interface TableDoc {
  columns: ColumnDoc[];
  rows: Cell[][];
  stats: { row_count: number };
}

export interface ErrorBody {
  code: string;
  message: string;
  offset?: number;
}

export interface SurveyInfo {
  survey: string;
  url: string;
  object_count: number;
  bands: string[];
}

export interface SurveysDoc {
  surveys: SurveyInfo[];
  default_k: number;
  default_max_radius_arcsec: number;
}

export type QueryOutcome =
  | { kind: "table"; table: TableDoc }
  | { kind: "error"; status: number; error: ErrorBody };
