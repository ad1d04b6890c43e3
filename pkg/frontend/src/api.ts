import { LensParams, ServiceReport } from './types';

export class ServiceError extends Error {
    constructor(
        message: string,
        readonly status: number,
        readonly superseded = false,
    ) {
        super(message);
    }
}

export interface SessionInfo {
    sessionId: string;
    width: number;
    height: number;
}

/** Thin client for the lens service; all deformation math stays server-side. */
export class LensClient {
    constructor(
        readonly baseUrl: string = '',
        private readonly fetchFn: typeof fetch = fetch.bind(globalThis),
    ) {}

    async createSession(imageBytes: Blob | ArrayBuffer): Promise<SessionInfo> {
        const resp = await this.fetchFn(`${this.baseUrl}/sessions`, {
            method: 'POST',
            body: imageBytes,
        });
        const body = await resp.json();
        if (!resp.ok) {
            throw new ServiceError(body.error ?? 'upload failed', resp.status);
        }
        return { sessionId: body.session_id, width: body.width, height: body.height };
    }

    async putLens(sessionId: string, params: LensParams): Promise<ServiceReport> {
        const resp = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/lens`, {
            method: 'PUT',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify(params),
        });
        const body = await resp.json();
        if (resp.status === 409) {
            throw new ServiceError('superseded by a newer request', resp.status, true);
        }
        if (!resp.ok) {
            throw new ServiceError(body.error ?? 'compute failed', resp.status);
        }
        return body as ServiceReport;
    }

    async deleteSession(sessionId: string): Promise<void> {
        await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}`, { method: 'DELETE' });
    }

    /** Cache-busted URL: the service overwrites rasters in place per session. */
    imageUrl(path: string, revision: number): string {
        return `${this.baseUrl}${path}?rev=${revision}`;
    }
}
