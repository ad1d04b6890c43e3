export interface CircleShape {
    kind: 'circle';
    center: [number, number];
    radius: number;
}

export interface PolygonShape {
    kind: 'polygon';
    points: [number, number][];
}

export type LensShape = CircleShape | PolygonShape;

export interface LensParams {
    shape: LensShape;
    profile: 'gaussian' | 'sphere';
    h0: number;
    alpha: number;
    epsilon: number;
    boundary_mode: 'fixed_rectangle' | 'free';
    mesh: { rows: number; cols: number };
}

export interface ServiceReport {
    iterations: number;
    converged: boolean;
    energy_trace: number[];
    flips: number[];
    distortion: { total: number; max: number; mean: number };
    stage_seconds: Record<string, number>;
    factorization_seconds: number;
    factorization_cached: boolean;
    result_url: string;
    heatmap_url: string;
}

export type DisplayMode = 'result' | 'heatmap' | 'side-by-side';

export interface Snapshot {
    params: LensParams;
    report: ServiceReport;
    resultUrl: string;
}
