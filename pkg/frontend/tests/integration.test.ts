// @vitest-environment node
//
// Full-contract test against the real backend: starts `speechlabel serve`
// on a scratch data directory, then runs the annotation and training flows
// through actual HTTP. Passing finalize proves the uploaded event log and
// WAV satisfy the server-side validation, not just our local mirror of it.
// Skipped when the backend CLI is not installed.

import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { spawn, spawnSync, ChildProcess } from 'node:child_process';
import { mkdtempSync, writeFileSync, mkdirSync, readFileSync } from 'node:fs';
import { createServer } from 'node:net';
import { tmpdir } from 'node:os';
import { fileURLToPath } from 'node:url';
import * as path from 'node:path';

import { ApiClient } from '../src/api';
import { AnnotationSession } from '../src/annotator';
import { Recorder } from '../src/audio';
import type { CaptureSource } from '../src/audio';
import type { MainFinalizeResponse, TrainingFinalizeResponse } from '../src/types';

const REPO_ROOT = path.resolve(path.dirname(fileURLToPath(import.meta.url)), '..', '..');

const backendAvailable = spawnSync('speechlabel', ['--help'], { timeout: 15000 }).status === 0;

function freePort(): Promise<number> {
    return new Promise((resolve, reject) => {
        const srv = createServer();
        srv.listen(0, '127.0.0.1', () => {
            const address = srv.address();
            if (address && typeof address === 'object') {
                const port = address.port;
                srv.close(() => resolve(port));
            } else {
                reject(new Error('no port'));
            }
        });
    });
}

function squareFlat(x0: number, y0: number, x1: number, y1: number): number[] {
    return [x0, y0, x1, y0, x1, y1, x0, y1];
}

class SilentSource implements CaptureSource {
    constructor(private readonly seconds: number) {}

    async start(onChunk: (chunk: Float32Array, rate: number) => void): Promise<void> {
        onChunk(new Float32Array(Math.round(this.seconds * 48000)), 48000);
    }

    async stop(): Promise<void> {}
}

class ManualClock {
    ms = 0;

    now = () => this.ms;

    tick(deltaMs: number): void {
        this.ms += deltaMs;
    }
}

describe.runIf(backendAvailable)('against the live backend', () => {
    let proc: ChildProcess;
    let api: ApiClient;
    let stderr = '';

    beforeAll(async () => {
        const dir = mkdtempSync(path.join(tmpdir(), 'speechlabel-ui-'));
        mkdirSync(path.join(dir, 'data'), { recursive: true });

        const gt = {
            images: [
                { id: 'img1', width: 640, height: 480, file_name: 'img1.png' },
                { id: 'img2', width: 640, height: 480, file_name: 'img2.png' },
            ],
            categories: [
                { id: 1, name: 'dog' }, { id: 2, name: 'cat' }, { id: 3, name: 'person' },
            ],
            annotations: [
                { id: 1, image_id: 'img1', category_id: 1, segmentation: [squareFlat(5, 5, 120, 120)] },
                { id: 2, image_id: 'img1', category_id: 2, segmentation: [squareFlat(200, 200, 320, 320)] },
                { id: 3, image_id: 'img2', category_id: 1, segmentation: [squareFlat(5, 5, 120, 120)] },
                { id: 4, image_id: 'img2', category_id: 3, segmentation: [squareFlat(400, 100, 560, 300)] },
            ],
        };
        writeFileSync(path.join(dir, 'gt.json'), JSON.stringify(gt));

        const fixtureEntries = [];
        for (const sid of ['ui--img1', 'ui--img2', 'uitrain--img1', 'uitrain--img2']) {
            fixtureEntries.push(
                {
                    key: { session: sid, object_index: 0 },
                    with_hints: [{ text: 'dog', confidence: 0.95 }],
                    without_hints: [{ text: 'dock' }],
                    speech_interval: [2.6, 3.6],
                },
                {
                    key: { session: sid, object_index: 1 },
                    with_hints: [{ text: 'cat', confidence: 0.9 }],
                    without_hints: [{ text: 'cot' }],
                    speech_interval: [5.6, 6.6],
                },
            );
        }
        writeFileSync(path.join(dir, 'asr.json'), JSON.stringify({ entries: fixtureEntries }));

        const port = await freePort();
        const config = {
            data_dir: path.join(dir, 'data'),
            vocabularies: [path.join(REPO_ROOT, 'fixtures', 'vocabularies', 'coco80.json')],
            embeddings: path.join(REPO_ROOT, 'fixtures', 'embeddings', 'mini_vectors.txt'),
            asr_mode: 'mock',
            asr_fixture: path.join(dir, 'asr.json'),
            ground_truth: path.join(dir, 'gt.json'),
            training_ground_truth: path.join(dir, 'gt.json'),
            images_per_round: 2,
            min_recall: 0.5,
            min_precision: 0.5,
            listen_host: '127.0.0.1',
            listen_port: port,
        };
        const configPath = path.join(dir, 'service.json');
        writeFileSync(configPath, JSON.stringify(config));

        proc = spawn('speechlabel', ['serve', '--config', configPath],
            { stdio: ['ignore', 'pipe', 'pipe'] });
        proc.stderr?.on('data', (d) => { stderr += String(d); });

        api = new ApiClient(`http://127.0.0.1:${port}`);
        const deadline = Date.now() + 20000;
        for (;;) {
            try {
                await api.vocabulary('coco80');
                break;
            } catch {
                if (Date.now() > deadline) {
                    throw new Error(`backend did not come up:\n${stderr}`);
                }
                await new Promise((r) => setTimeout(r, 250));
            }
        }
    }, 30000);

    afterAll(() => {
        proc?.kill();
    });

    async function annotateAndFinish(sessionId: string, imageId: string,
                                     mode: 'main' | 'training') {
        const clock = new ManualClock();
        const session = new AnnotationSession({
            mode, imageSize: { width: 640, height: 480 }, nowMs: clock.now,
        });
        const recorder = new Recorder(new SilentSource(1.0));
        await recorder.start();
        session.imageShown();

        for (let i = 0; i < 40; i++) {
            clock.tick(30);
            session.pointerMoved(20 + i * 4, 30 + i * 2);
        }
        clock.tick(1800);
        session.clicked(60, 60);       // inside the dog mask
        clock.tick(500);
        session.openClasses();
        clock.tick(2200);
        session.closeClasses();
        clock.tick(300);
        session.clicked(250, 250);     // inside the cat mask on img1
        if (mode === 'training') {
            session.setTyped(0, 'dog');
            session.setTyped(1, 'cat');
        }
        clock.tick(2500);
        const { events, lastEventT } = session.submit();
        const wav = await recorder.stop(lastEventT);

        await api.uploadEvents(sessionId, imageId, events);
        await api.uploadAudio(sessionId, imageId, wav);
        if (mode === 'training') {
            return api.finalizeTraining(sessionId, imageId, session.typedEntries(),
                { width: 640, height: 480 });
        }
        return api.finalizeMain(sessionId, imageId, { width: 640, height: 480 });
    }

    it('annotates an image end to end and the server accepts the log', async () => {
        const info = await api.createSession('ui-ann', 'main', 'ui');
        expect(info.image?.image_id).toBe('img1');

        const response = await annotateAndFinish('ui', 'img1', 'main') as MainFinalizeResponse;
        expect(response.labeling.labels.map((l) => l.class)).toEqual(['dog', 'cat']);
        expect(response.labeling.flags).toEqual({ duplicate: 0, unlabeled: 0 });
        expect(response.next_image?.image_id).toBe('img2');
    }, 20000);

    it('runs a training round with feedback and a summary', async () => {
        await api.createSession('ui-train', 'training', 'uitrain');

        const first = await annotateAndFinish('uitrain', 'img1', 'training') as TrainingFinalizeResponse;
        expect(first.feedback.correct.sort()).toEqual(['cat', 'dog']);
        expect(first.feedback.missed).toEqual([]);
        expect(await api.trainingSummaryIfComplete('uitrain')).toBeNull();

        // second image: one correct (dog), person missed, cat is a wrong label
        const second = await annotateAndFinish('uitrain', 'img2', 'training') as TrainingFinalizeResponse;
        expect(second.feedback.missed).toEqual(['person']);
        expect(second.feedback.wrong).toEqual(['cat']);

        const summary = await api.trainingSummaryIfComplete('uitrain');
        expect(summary).not.toBeNull();
        expect(summary!.round_index).toBe(0);
        expect(summary!.per_image).toHaveLength(2);
        expect(summary!.recall).toBeCloseTo(3 / 4, 9);
        expect(summary!.passed).toBe(true);
    }, 20000);

    it('rejects an event log the client failed to gate', async () => {
        await api.createSession('ui-bad', 'main', 'uibad');
        // bypass AnnotationSession: a click before image_shown must bounce
        const badLog = [
            JSON.stringify({ kind: 'click', t: 0.5, x: 10, y: 10 }),
            JSON.stringify({ kind: 'image_shown', t: 0 }),
            JSON.stringify({ kind: 'submit', t: 1.0 }),
        ].join('\n') + '\n';
        await api.uploadEvents('uibad', 'img1', badLog);
        const recorder = new Recorder(new SilentSource(1.5));
        await recorder.start();
        await api.uploadAudio('uibad', 'img1', await recorder.stop(1.5));
        await expect(api.finalizeMain('uibad', 'img1', { width: 640, height: 480 }))
            .rejects.toMatchObject({ status: 422 });
    }, 20000);
});

describe.runIf(!backendAvailable)('backend unavailable', () => {
    it.skip('integration tests skipped: speechlabel CLI not on PATH', () => {});
});
