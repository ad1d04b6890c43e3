import { CircleShape, LensShape } from './types';

export type DragTarget = 'center' | 'rim' | null;

const RIM_BAND = 10; // px tolerance around the outline for the resize handle

export function hitTest(shape: LensShape, x: number, y: number): DragTarget {
    if (shape.kind !== 'circle') {
        return null;
    }
    const d = Math.hypot(x - shape.center[0], y - shape.center[1]);
    if (Math.abs(d - shape.radius) <= RIM_BAND) {
        return 'rim';
    }
    if (d < shape.radius) {
        return 'center';
    }
    return null;
}

export function dragCircle(
    shape: CircleShape,
    target: DragTarget,
    x: number,
    y: number,
    bounds: [number, number],
): CircleShape {
    if (target === 'center') {
        const cx = Math.min(Math.max(x, 0), bounds[0]);
        const cy = Math.min(Math.max(y, 0), bounds[1]);
        return { ...shape, center: [cx, cy] };
    }
    if (target === 'rim') {
        const r = Math.max(4, Math.hypot(x - shape.center[0], y - shape.center[1]));
        return { ...shape, radius: r };
    }
    return shape;
}

/** Wheel resize: multiplicative, clamped to stay useful on screen. */
export function wheelResize(shape: CircleShape, deltaY: number, maxRadius: number): CircleShape {
    const factor = Math.exp(-deltaY / 400);
    const r = Math.min(Math.max(shape.radius * factor, 4), maxRadius);
    return { ...shape, radius: r };
}

/** Collects clicked points into an outline; close() needs at least 3. */
export class PolygonSketch {
    readonly points: [number, number][] = [];

    add(x: number, y: number): void {
        this.points.push([x, y]);
    }

    /** True when the click lands back on the first point (closing gesture). */
    isClosingClick(x: number, y: number, tolerance = 8): boolean {
        if (this.points.length < 3) {
            return false;
        }
        const [x0, y0] = this.points[0];
        return Math.hypot(x - x0, y - y0) <= tolerance;
    }

    close(): LensShape {
        if (this.points.length < 3) {
            throw new Error('a polygon outline needs at least 3 points');
        }
        return { kind: 'polygon', points: [...this.points] };
    }

    clear(): void {
        this.points.length = 0;
    }
}

/** Slider ranges derived from the current lens, h0 in [0, 5r]. */
export function h0SliderMax(shape: LensShape): number {
    if (shape.kind === 'circle') {
        return 5 * shape.radius;
    }
    const xs = shape.points.map((p) => p[0]);
    const ys = shape.points.map((p) => p[1]);
    const extent = Math.max(
        Math.max(...xs) - Math.min(...xs),
        Math.max(...ys) - Math.min(...ys),
    );
    return 2.5 * extent;
}
