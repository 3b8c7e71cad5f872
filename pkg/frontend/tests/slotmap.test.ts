import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { Marking, serializeSlotMap } from "../src/slotmap.js";

// Corner coordinates of the standard two-by-four test lot: 120x180 slots
// behind a 20 pixel gutter, clicked top-left, top-right, bottom-right,
// bottom-left, one slot at a time.
function lotACorners(): [number, number][] {
    const clicks: [number, number][] = [];
    for (let row = 0; row < 2; row++) {
        for (let col = 0; col < 4; col++) {
            const x0 = 20 + col * 140;
            const y0 = 20 + row * 200;
            const x1 = x0 + 119;
            const y1 = y0 + 179;
            clicks.push([x0, y0], [x1, y0], [x1, y1], [x0, y1]);
        }
    }
    return clicks;
}

describe("marking", () => {
    it("thirty-two clicks export the same bytes as the command-line tool", () => {
        const marking = new Marking();
        for (const [x, y] of lotACorners()) {
            marking.addClick(x, y);
        }
        expect(marking.slotCount()).toBe(8);
        expect(marking.complete()).toBe(true);

        const golden = readFileSync("../tests/data/lot_a_slotmap.json", "utf8");
        const exported = serializeSlotMap("A", 640, 480, marking.slots);
        expect(exported).toBe(golden);
    });

    it("counts a slot on every fourth click", () => {
        const marking = new Marking();
        marking.addClick(0, 0);
        marking.addClick(10, 0);
        marking.addClick(10, 10);
        expect(marking.slotCount()).toBe(0);
        expect(marking.complete()).toBe(false);
        marking.addClick(0, 10);
        expect(marking.slotCount()).toBe(1);
        expect(marking.complete()).toBe(true);
    });

    it("rounds clicks to the pixel grid", () => {
        const marking = new Marking();
        marking.addClick(19.6, 20.4);
        expect(marking.pending[0]).toEqual({ x: 20, y: 20 });
    });

    it("undo removes the newest corner", () => {
        const marking = new Marking();
        marking.addClick(0, 0);
        marking.addClick(5, 0);
        marking.undo();
        expect(marking.pending).toEqual([{ x: 0, y: 0 }]);
        marking.undo();
        expect(marking.pending).toEqual([]);
        marking.undo();
        expect(marking.pending).toEqual([]);
        expect(marking.slotCount()).toBe(0);
    });

    it("undo reopens the last completed slot", () => {
        const marking = new Marking();
        for (const [x, y] of lotACorners().slice(0, 8)) {
            marking.addClick(x, y);
        }
        expect(marking.slotCount()).toBe(2);
        marking.undo();
        expect(marking.slotCount()).toBe(1);
        expect(marking.complete()).toBe(false);
        expect(marking.pending).toHaveLength(3);
        marking.addClick(160, 199);
        expect(marking.slotCount()).toBe(2);
        expect(marking.slots[1][3]).toEqual({ x: 160, y: 199 });
    });

    it("serializes an empty map", () => {
        expect(serializeSlotMap("B", 320, 240, []))
            .toBe('{"lot_id":"B","image_width":320,"image_height":240,"slots":[]}');
    });
});
