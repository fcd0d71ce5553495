// Document shapes returned by the analysis service. These mirror the
// JSON the backend emits; the client never derives measurements itself.

export interface ConfigDoc {
  axis: string;
  prominence_frac: number;
  bracket_position: number;
  alpha_override: number | null;
  se: string;
  median_window: number;
  enhance: boolean;
  enhance_se: string;
  binarize_epsilon: number;
  min_band_area: number;
  roi: number[] | null;
}

export interface DecisionDoc {
  th_level_std: number;
  alpha: number;
  th_level: number;
  source: string;
}

export interface BandDoc {
  label: number;
  area: number;
  centroid: [number, number];
  bbox: [number, number, number, number];
  mean_intensity: number;
  total_intensity: number;
}

export interface SessionInfo {
  id: string;
  width: number;
  height: number;
  bit_depth: number;
  config: ConfigDoc;
}

export interface AnalysisDoc {
  config: ConfigDoc;
  decision: DecisionDoc;
  bands: BandDoc[];
}

export interface BandsDoc {
  bands: BandDoc[];
  decision: DecisionDoc;
}

export interface RatioDoc {
  ref: number;
  n: number;
  ratio: number;
}

export interface ReportDoc {
  dir: string;
  path: string;
}

export interface ErrorBody {
  error: {
    code: string;
    message: string;
    stage: string | null;
  };
}
