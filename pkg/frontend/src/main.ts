import { LensClient, ServiceError } from './api';
import { debounced } from './debounce';
import { PolygonSketch, dragCircle, h0SliderMax, hitTest, wheelResize } from './geometry';
import { addSnapshot, applyError, applyResult, createState, displayLabel, issueRequest } from './state';
import { alphaSweep } from './sweep';
import { DisplayMode, LensParams } from './types';

const client = new LensClient('');
const state = createState();

const el = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

const canvas = el<HTMLCanvasElement>('view');
const ctx = canvas.getContext('2d')!;
const traceCanvas = el<HTMLCanvasElement>('trace');
const statusLine = el<HTMLDivElement>('status');
const errorBanner = el<HTMLDivElement>('error');
const h0Slider = el<HTMLInputElement>('h0');
const alphaSlider = el<HTMLInputElement>('alpha');
const h0Value = el<HTMLSpanElement>('h0-value');
const alphaValue = el<HTMLSpanElement>('alpha-value');
const profileSelect = el<HTMLSelectElement>('profile');
const boundarySelect = el<HTMLSelectElement>('boundary');
const displaySelect = el<HTMLSelectElement>('display');
const polygonButton = el<HTMLButtonElement>('polygon');
const sweepButton = el<HTMLButtonElement>('sweep');
const fileInput = el<HTMLInputElement>('file');
const snapshotsDiv = el<HTMLDivElement>('snapshots');

let resultImg: HTMLImageElement | null = null;
let heatmapImg: HTMLImageElement | null = null;
let sketch: PolygonSketch | null = null;
let dragTarget: ReturnType<typeof hitTest> = null;

function setError(message: string | null): void {
    errorBanner.textContent = message ?? '';
    errorBanner.style.display = message ? 'block' : 'none';
}

function loadImage(url: string): Promise<HTMLImageElement> {
    return new Promise((resolve, reject) => {
        const img = new Image();
        img.onload = () => resolve(img);
        img.onerror = () => reject(new Error(`failed to load ${url}`));
        img.src = url;
    });
}

async function commit(params: LensParams): Promise<void> {
    if (!state.sessionId) {
        return;
    }
    const seq = issueRequest(state, params);
    render();
    try {
        const report = await client.putLens(state.sessionId, params);
        if (seq !== state.latestIssued) {
            return; // stale response: a newer commit is in flight
        }
        const [result, heatmap] = await Promise.all([
            loadImage(client.imageUrl(report.result_url, seq)),
            loadImage(client.imageUrl(report.heatmap_url, seq)),
        ]);
        if (applyResult(state, seq, params, report)) {
            resultImg = result;
            heatmapImg = heatmap;
        }
    } catch (err) {
        if (err instanceof ServiceError && err.superseded) {
            return;
        }
        if (applyError(state, seq, err instanceof Error ? err.message : String(err))) {
            setError(`${state.lastError} — adjust and try again`);
        }
    }
    render();
}

const slideCommit = debounced<LensParams>((p) => void commit(p), 150);

function render(): void {
    const [w, h] = state.imageSize;
    const side = state.display === 'side-by-side';
    canvas.width = side ? 2 * w : w;
    canvas.height = h;
    ctx.clearRect(0, 0, canvas.width, canvas.height);

    const panes: [HTMLImageElement | null, number][] =
        state.display === 'result'
            ? [[resultImg, 0]]
            : state.display === 'heatmap'
              ? [[heatmapImg, 0]]
              : [
                    [resultImg, 0],
                    [heatmapImg, w],
                ];
    for (const [img, dx] of panes) {
        if (img) {
            ctx.drawImage(img, dx, 0);
        } else {
            ctx.fillStyle = '#22262b';
            ctx.fillRect(dx, 0, w, h);
        }
    }

    // lens overlay on the first pane
    ctx.save();
    ctx.strokeStyle = state.pending ? '#f5a623' : '#3ad07a';
    ctx.lineWidth = 1.5;
    if (state.params.shape.kind === 'circle') {
        const [cx, cy] = state.params.shape.center;
        ctx.beginPath();
        ctx.arc(cx, cy, state.params.shape.radius, 0, 2 * Math.PI);
        ctx.stroke();
    } else {
        const pts = state.params.shape.points;
        ctx.beginPath();
        ctx.moveTo(pts[0][0], pts[0][1]);
        for (const [x, y] of pts.slice(1)) {
            ctx.lineTo(x, y);
        }
        ctx.closePath();
        ctx.stroke();
    }
    if (sketch) {
        ctx.strokeStyle = '#4da3ff';
        ctx.setLineDash([4, 3]);
        ctx.beginPath();
        sketch.points.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
        ctx.stroke();
    }
    ctx.restore();

    const rep = state.displayed?.report;
    statusLine.textContent = rep
        ? `${displayLabel(state)} · ${rep.iterations} iteration(s) · ` +
          `energy ${rep.energy_trace[rep.energy_trace.length - 1]?.toExponential(3)} · ` +
          `${rep.factorization_cached ? 'factorization cached' : `factorized in ${(rep.factorization_seconds * 1000).toFixed(0)} ms`}` +
          (rep.flips.length ? ` · ${rep.flips.length} flipped triangle(s)!` : '')
        : displayLabel(state);
    renderTrace();
}

function renderTrace(): void {
    const rep = state.displayed?.report;
    const tctx = traceCanvas.getContext('2d')!;
    tctx.clearRect(0, 0, traceCanvas.width, traceCanvas.height);
    if (!rep || rep.energy_trace.length === 0) {
        return;
    }
    const vals = rep.energy_trace;
    const top = Math.max(...vals);
    tctx.strokeStyle = '#4da3ff';
    tctx.beginPath();
    vals.forEach((v, i) => {
        const x = (i / Math.max(vals.length - 1, 1)) * (traceCanvas.width - 8) + 4;
        const y = traceCanvas.height - 4 - (v / top) * (traceCanvas.height - 8);
        i ? tctx.lineTo(x, y) : tctx.moveTo(x, y);
    });
    tctx.stroke();
}

function syncSliders(): void {
    const max = h0SliderMax(state.params.shape);
    h0Slider.max = String(Math.round(max));
    h0Slider.value = String(Math.round(state.params.h0));
    alphaSlider.value = String(state.params.alpha);
    h0Value.textContent = h0Slider.value;
    alphaValue.textContent = Number(alphaSlider.value).toFixed(2);
}

fileInput.addEventListener('change', async () => {
    const file = fileInput.files?.[0];
    if (!file) {
        return;
    }
    setError(null);
    try {
        const info = await client.createSession(file);
        state.sessionId = info.sessionId;
        state.imageSize = [info.width, info.height];
        state.params = { ...state.params, ...{} };
        state.params.shape = {
            kind: 'circle',
            center: [info.width / 2, info.height / 2],
            radius: Math.round(0.2 * Math.min(info.width, info.height)),
        };
        state.params.h0 = (state.params.shape as { radius: number }).radius;
        resultImg = heatmapImg = null;
        state.displayed = null;
        syncSliders();
        render();
        void commit({ ...state.params });
    } catch (err) {
        setError(err instanceof Error ? err.message : String(err));
    }
});

canvas.addEventListener('pointerdown', (ev) => {
    const rect = canvas.getBoundingClientRect();
    const x = ev.clientX - rect.left;
    const y = ev.clientY - rect.top;
    if (sketch) {
        if (sketch.isClosingClick(x, y)) {
            const shape = sketch.close();
            sketch = null;
            polygonButton.textContent = 'draw polygon';
            void commit({ ...state.params, shape });
        } else {
            sketch.add(x, y);
        }
        render();
        return;
    }
    if (state.params.shape.kind === 'circle') {
        dragTarget = hitTest(state.params.shape, x, y);
        if (dragTarget) {
            canvas.setPointerCapture(ev.pointerId);
        }
    }
});

canvas.addEventListener('pointermove', (ev) => {
    if (!dragTarget || state.params.shape.kind !== 'circle') {
        return;
    }
    const rect = canvas.getBoundingClientRect();
    state.params = {
        ...state.params,
        shape: dragCircle(
            state.params.shape,
            dragTarget,
            ev.clientX - rect.left,
            ev.clientY - rect.top,
            state.imageSize,
        ),
    };
    render();
});

canvas.addEventListener('pointerup', () => {
    if (dragTarget) {
        dragTarget = null;
        void commit({ ...state.params });
    }
});

canvas.addEventListener('wheel', (ev) => {
    if (state.params.shape.kind !== 'circle') {
        return;
    }
    ev.preventDefault();
    state.params = {
        ...state.params,
        shape: wheelResize(
            state.params.shape,
            ev.deltaY,
            Math.max(...state.imageSize),
        ),
    };
    syncSliders();
    render();
    slideCommit.push({ ...state.params });
});

h0Slider.addEventListener('input', () => {
    state.params = { ...state.params, h0: Number(h0Slider.value) };
    h0Value.textContent = h0Slider.value;
    slideCommit.push({ ...state.params });
});
alphaSlider.addEventListener('input', () => {
    state.params = { ...state.params, alpha: Number(alphaSlider.value) };
    alphaValue.textContent = Number(alphaSlider.value).toFixed(2);
    slideCommit.push({ ...state.params });
});
for (const slider of [h0Slider, alphaSlider]) {
    slider.addEventListener('change', () => slideCommit.flush());
}

profileSelect.addEventListener('change', () => {
    void commit({ ...state.params, profile: profileSelect.value as LensParams['profile'] });
});
boundarySelect.addEventListener('change', () => {
    void commit({
        ...state.params,
        boundary_mode: boundarySelect.value as LensParams['boundary_mode'],
    });
});
displaySelect.addEventListener('change', () => {
    state.display = displaySelect.value as DisplayMode;
    render();
});

polygonButton.addEventListener('click', () => {
    if (sketch) {
        sketch = null;
        polygonButton.textContent = 'draw polygon';
    } else {
        sketch = new PolygonSketch();
        polygonButton.textContent = 'click points; click the first to close';
    }
    render();
});

sweepButton.addEventListener('click', async () => {
    if (!state.sessionId) {
        return;
    }
    sweepButton.disabled = true;
    try {
        const snaps = await alphaSweep(client, state.sessionId, state.params);
        snapshotsDiv.innerHTML = '';
        for (const snap of snaps) {
            addSnapshot(state, snap);
            const fig = document.createElement('figure');
            const img = document.createElement('img');
            img.src = snap.resultUrl;
            img.width = 128;
            const cap = document.createElement('figcaption');
            cap.textContent = `alpha ${snap.params.alpha}`;
            fig.append(img, cap);
            snapshotsDiv.append(fig);
        }
        // leave the last sweep value displayed, consistent with its label
        const last = snaps[snaps.length - 1];
        const seq = issueRequest(state, last.params);
        applyResult(state, seq, last.params, last.report);
        resultImg = await loadImage(client.imageUrl(last.report.result_url, seq));
        heatmapImg = await loadImage(client.imageUrl(last.report.heatmap_url, seq));
        syncSliders();
        render();
    } catch (err) {
        setError(err instanceof Error ? err.message : String(err));
    } finally {
        sweepButton.disabled = false;
    }
});

syncSliders();
render();
