import { LensClient } from './api';
import { LensParams, Snapshot } from './types';

/**
 * Runs the same lens at several blending values and collects one snapshot
 * per value. Requests go out sequentially so each reuses the session's
 * cached factorization (only alpha changes).
 */
export async function alphaSweep(
    client: LensClient,
    sessionId: string,
    base: LensParams,
    alphas: number[] = [0, 0.01, 0.1, 0.5],
): Promise<Snapshot[]> {
    const out: Snapshot[] = [];
    for (const alpha of alphas) {
        const params: LensParams = { ...base, alpha };
        const report = await client.putLens(sessionId, params);
        out.push({
            params,
            report,
            resultUrl: client.imageUrl(report.result_url, out.length + 1),
        });
    }
    return out;
}
