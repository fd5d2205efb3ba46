/** Payload shapes of the paddlekit HTTP API, version "v": 1. */

export type SessionStatus = 'processing' | 'ready' | 'failed';

export interface SessionCreated {
  v: 1;
  id: string;
  status: SessionStatus;
}

export interface SessionStatusDoc {
  v: 1;
  id: string;
  status: SessionStatus;
  created_at: number;
  files: Record<string, string>;
  error?: { stage: string | null; message: string | null };
}

export interface StrokePrediction {
  stroke: number;
  phase: string;
  label: string;
  score: number;
}

export interface AnalysisDoc {
  v: 1;
  per_phase_percent: Record<string, number>;
  overall_percent: number;
  predictions: StrokePrediction[];
  display_strokes: number[];
  rejected_strokes: number;
  accepted_strokes: number;
  feedback: string | null;
}

export interface StrokeTraces {
  stroke: number;
  frames: number;
  traces: Record<string, number[]>;
}

export interface GraphsDoc {
  v: 1;
  strokes: StrokeTraces[];
  reference: {
    description?: string;
    frames: number;
    traces: Record<string, number[]>;
  };
}

export interface FeedbackDoc {
  v: 1;
  id: string;
  feedback: string;
}

/** The five upload slots, keyed exactly as the service expects them. */
export const UPLOAD_ROLES = [
  'phone_accel',
  'phone_gyro',
  'phone_mag',
  'watch_left',
  'watch_right',
] as const;

export type UploadRole = (typeof UPLOAD_ROLES)[number];
