import { describe, expect, it } from 'vitest';

import { PolygonSketch, dragCircle, h0SliderMax, hitTest, wheelResize } from '../src/geometry';
import { CircleShape } from '../src/types';

const circle: CircleShape = { kind: 'circle', center: [100, 100], radius: 40 };

describe('lens hit testing and dragging', () => {
    it('classifies center, rim, and outside', () => {
        expect(hitTest(circle, 100, 100)).toBe('center');
        expect(hitTest(circle, 100, 62)).toBe('rim'); // 38 px from center
        expect(hitTest(circle, 100, 144)).toBe('rim'); // 44 px
        expect(hitTest(circle, 10, 10)).toBe(null);
    });

    it('dragging the center moves it, clamped to the image', () => {
        const moved = dragCircle(circle, 'center', 150, 90, [512, 512]);
        expect(moved.center).toEqual([150, 90]);
        expect(moved.radius).toBe(40);
        const clamped = dragCircle(circle, 'center', -20, 700, [512, 512]);
        expect(clamped.center).toEqual([0, 512]);
    });

    it('dragging the rim resizes around the fixed center', () => {
        const out = dragCircle(circle, 'rim', 100, 170, [512, 512]);
        expect(out.center).toEqual([100, 100]);
        expect(out.radius).toBeCloseTo(70);
    });

    it('wheel resize is multiplicative and clamped', () => {
        const bigger = wheelResize(circle, -400, 400);
        expect(bigger.radius).toBeGreaterThan(circle.radius);
        const smaller = wheelResize(circle, 400, 400);
        expect(smaller.radius).toBeLessThan(circle.radius);
        expect(wheelResize({ ...circle, radius: 399 }, -4000, 400).radius).toBe(400);
        expect(wheelResize({ ...circle, radius: 5 }, 4000, 400).radius).toBe(4);
    });
});

describe('polygon sketching', () => {
    it('collects points and closes on the first point', () => {
        const sk = new PolygonSketch();
        sk.add(10, 10);
        sk.add(80, 12);
        expect(sk.isClosingClick(11, 11)).toBe(false); // not enough points yet
        sk.add(50, 70);
        expect(sk.isClosingClick(200, 200)).toBe(false);
        expect(sk.isClosingClick(12, 11)).toBe(true);
        const shape = sk.close();
        expect(shape.kind).toBe('polygon');
        if (shape.kind === 'polygon') {
            expect(shape.points).toHaveLength(3);
        }
    });

    it('refuses to close with fewer than 3 points', () => {
        const sk = new PolygonSketch();
        sk.add(1, 1);
        sk.add(2, 2);
        expect(() => sk.close()).toThrow();
    });
});

describe('slider ranges', () => {
    it('h0 range is five radii for circles', () => {
        expect(h0SliderMax(circle)).toBe(200);
    });

    it('h0 range follows the polygon extent', () => {
        const max = h0SliderMax({
            kind: 'polygon',
            points: [
                [0, 0],
                [100, 0],
                [50, 40],
            ],
        });
        expect(max).toBe(250);
    });
});
