import {
    ImageDescriptor,
    MainFinalizeResponse,
    Mode,
    RoundSummary,
    SessionInfo,
    TrainingFinalizeResponse,
    TypedEntry,
    VocabularyInfo,
} from './types';

export class ApiError extends Error {
    constructor(public status: number, public detail: unknown) {
        super(`HTTP ${status}: ${JSON.stringify(detail)}`);
    }
}

/** Thin typed client for the labelling service HTTP API. */
export class ApiClient {
    constructor(
        private readonly baseUrl: string = '',
        private readonly token: string | null = null,
        private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
    ) {}

    private headers(extra: Record<string, string> = {}): Record<string, string> {
        return this.token ? { Authorization: `Bearer ${this.token}`, ...extra } : extra;
    }

    private async request<T>(method: string, path: string, init: RequestInit = {}): Promise<T> {
        const response = await this.fetchFn(`${this.baseUrl}${path}`, {
            method,
            ...init,
            headers: { ...this.headers(), ...(init.headers as Record<string, string> | undefined) },
        });
        let body: unknown = null;
        const text = await response.text();
        if (text) {
            try {
                body = JSON.parse(text);
            } catch {
                body = text;
            }
        }
        if (!response.ok) {
            throw new ApiError(response.status, (body as { detail?: unknown })?.detail ?? body);
        }
        return body as T;
    }

    createSession(annotatorId: string, mode: Mode, sessionId?: string,
                  vocabularyId?: string): Promise<SessionInfo> {
        return this.request<SessionInfo>('POST', '/sessions', {
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({
                annotator_id: annotatorId,
                mode,
                ...(sessionId ? { session_id: sessionId } : {}),
                ...(vocabularyId ? { vocabulary_id: vocabularyId } : {}),
            }),
        });
    }

    vocabulary(vocabularyId: string): Promise<VocabularyInfo> {
        return this.request<VocabularyInfo>('GET', `/vocabulary/${vocabularyId}`);
    }

    imageUrl(imageId: string): string {
        return `${this.baseUrl}/images/${imageId}`;
    }

    uploadEvents(sessionId: string, imageId: string, jsonl: string): Promise<void> {
        return this.request<void>(
            'POST', `/sessions/${sessionId}/images/${imageId}/events`, {
                headers: { 'Content-Type': 'application/x-ndjson' },
                body: jsonl,
            });
    }

    uploadAudio(sessionId: string, imageId: string, wav: ArrayBuffer): Promise<void> {
        return this.request<void>(
            'POST', `/sessions/${sessionId}/images/${imageId}/audio`, {
                headers: { 'Content-Type': 'audio/wav' },
                body: wav,
            });
    }

    finalizeMain(sessionId: string, imageId: string,
                 dims?: { width: number; height: number }): Promise<MainFinalizeResponse> {
        return this.request<MainFinalizeResponse>(
            'POST', `/sessions/${sessionId}/images/${imageId}/finalize`, {
                headers: { 'Content-Type': 'application/json' },
                body: JSON.stringify(dims
                    ? { image_width: dims.width, image_height: dims.height }
                    : {}),
            });
    }

    finalizeTraining(sessionId: string, imageId: string, typed: TypedEntry[],
                     dims?: { width: number; height: number }): Promise<TrainingFinalizeResponse> {
        return this.request<TrainingFinalizeResponse>(
            'POST', `/sessions/${sessionId}/images/${imageId}/finalize`, {
                headers: { 'Content-Type': 'application/json' },
                body: JSON.stringify({
                    typed,
                    ...(dims ? { image_width: dims.width, image_height: dims.height } : {}),
                }),
            });
    }

    trainingSummary(sessionId: string): Promise<RoundSummary> {
        return this.request<RoundSummary>('GET', `/sessions/${sessionId}/training/summary`);
    }

    /** null while the round is still incomplete (the server replies 409). */
    async trainingSummaryIfComplete(sessionId: string): Promise<RoundSummary | null> {
        try {
            return await this.trainingSummary(sessionId);
        } catch (err) {
            if (err instanceof ApiError && err.status === 409) return null;
            throw err;
        }
    }

    async imageDescriptor(sessionInfo: SessionInfo): Promise<ImageDescriptor | null> {
        return sessionInfo.image;
    }
}
