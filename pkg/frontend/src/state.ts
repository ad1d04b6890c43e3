import { DisplayMode, LensParams, ServiceReport, Snapshot } from './types';

/**
 * Request bookkeeping: every committed change gets a sequence number, and
 * only the response matching the newest issued request may be displayed.
 * Responses to older requests (raced or superseded server-side) are
 * dropped, so the shown result always matches the shown parameters.
 */
export interface ViewerState {
    sessionId: string | null;
    imageSize: [number, number];
    params: LensParams;
    display: DisplayMode;
    pending: boolean;
    latestIssued: number;
    displayed: { params: LensParams; report: ServiceReport; seq: number } | null;
    snapshots: Snapshot[];
    lastError: string | null;
}

export function defaultParams(width: number, height: number): LensParams {
    const radius = Math.round(0.2 * Math.min(width, height));
    return {
        shape: { kind: 'circle', center: [width / 2, height / 2], radius },
        profile: 'gaussian',
        h0: radius,
        alpha: 0,
        epsilon: 0.001,
        boundary_mode: 'fixed_rectangle',
        mesh: { rows: 100, cols: 100 },
    };
}

export function createState(width = 512, height = 512): ViewerState {
    return {
        sessionId: null,
        imageSize: [width, height],
        params: defaultParams(width, height),
        display: 'result',
        pending: false,
        latestIssued: 0,
        displayed: null,
        snapshots: [],
        lastError: null,
    };
}

export function issueRequest(state: ViewerState, params: LensParams): number {
    state.params = params;
    state.pending = true;
    state.lastError = null;
    state.latestIssued += 1;
    return state.latestIssued;
}

/** Returns true when the response was accepted for display. */
export function applyResult(
    state: ViewerState,
    seq: number,
    params: LensParams,
    report: ServiceReport,
): boolean {
    if (seq !== state.latestIssued) {
        return false; // stale: a newer request was issued meanwhile
    }
    state.displayed = { params, report, seq };
    state.pending = false;
    return true;
}

export function applyError(state: ViewerState, seq: number, message: string): boolean {
    if (seq !== state.latestIssued) {
        return false;
    }
    state.pending = false;
    state.lastError = message;
    return true;
}

/** The label shown next to the raster: pending requests are marked so the
 * display never silently claims parameters it does not show. */
export function displayLabel(state: ViewerState): string {
    if (state.pending) {
        return 'computing…';
    }
    if (!state.displayed) {
        return 'no result yet';
    }
    const p = state.displayed.params;
    const shape =
        p.shape.kind === 'circle'
            ? `circle r=${p.shape.radius.toFixed(0)}`
            : `polygon ${p.shape.points.length} pts`;
    return `${shape} h0=${p.h0.toFixed(0)} alpha=${p.alpha}`;
}

export function addSnapshot(state: ViewerState, snap: Snapshot): void {
    state.snapshots.push(snap);
}
