// @vitest-environment happy-dom
import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { FinalDoc, JobEvent, SuggestionDoc } from "../src/api.js";
import { applyEvents, bannerText, BlockView, renderBlockCard, slotColor } from "../src/dashboard.js";

// Event log recorded from a detection run over a four-slot lot: slot 1
// occupied at frame 0 and gone by frame 20, slot 3 taken at frame 8.
const RECORDING: { events: JobEvent[], final: FinalDoc } = JSON.parse(
    readFileSync("tests/fixtures/lot_a_events.json", "utf8"));

function cardCells(view: BlockView): Map<string, string> {
    document.body.innerHTML = renderBlockCard(view);
    const cells = new Map<string, string>();
    document.querySelectorAll(".cell").forEach(cell => {
        cells.set(cell.getAttribute("data-slot")!, cell.className);
    });
    return cells;
}

describe("dashboard", () => {
    it("folds a recorded event log into the final lot status", () => {
        const view = new BlockView("j1", "A");
        const cut = 4;
        applyEvents(view, { state: "running", events: RECORDING.events.slice(0, cut) });
        expect(view.fetched).toBe(cut);
        expect(view.available).toBe(3);
        expect(view.total).toBe(4);

        applyEvents(view, {
            state: "done",
            events: RECORDING.events.slice(cut),
            final: RECORDING.final,
        });
        expect(view.fetched).toBe(RECORDING.events.length);
        expect(view.available).toBe(RECORDING.final.available);
        expect(view.total).toBe(RECORDING.final.total);
        for (const slot of RECORDING.final.states) {
            expect(view.slots.get(slot.slot_id)).toBe(slot.state);
        }
    });

    it("colors cells red, green, and gray from slot states", () => {
        expect(slotColor("occupied")).toBe("red");
        expect(slotColor("vacant")).toBe("green");
        expect(slotColor(undefined)).toBe("gray");

        const view = new BlockView("j1", "A");
        applyEvents(view, { state: "running", events: RECORDING.events.slice(0, 4) });
        view.slots.delete(4);
        const cells = cardCells(view);
        expect(cells.get("1")).toContain("red");
        expect(cells.get("2")).toContain("green");
        expect(cells.get("3")).toContain("green");
        expect(cells.size).toBe(3);
    });

    it("card shows the live availability counter", () => {
        const view = new BlockView("j1", "A");
        applyEvents(view, { state: "done", events: RECORDING.events, final: RECORDING.final });
        document.body.innerHTML = renderBlockCard(view);
        const counter = document.querySelector(".counter")!;
        expect(counter.textContent).toBe("3 / 4 free");
        const card = document.querySelector(".block-card")!;
        expect(card.getAttribute("data-block")).toBe("A");
        expect(card.getAttribute("data-state")).toBe("done");
        expect(document.querySelectorAll(".cell").length).toBe(4);
    });

    it("card before any events says it is waiting", () => {
        document.body.innerHTML = renderBlockCard(new BlockView("j1", "B"));
        expect(document.querySelector(".counter")!.textContent)
            .toBe("waiting for detection");
        expect(document.querySelectorAll(".cell").length).toBe(0);
    });

    it("card reports a failed job", () => {
        const view = new BlockView("j1", "B");
        applyEvents(view, { state: "failed", events: [], error: "boom" });
        document.body.innerHTML = renderBlockCard(view);
        expect(document.querySelector(".error")!.textContent)
            .toBe("detection failed: boom");
    });

    it("replay from the start reproduces the same view as incremental polls", () => {
        const incremental = new BlockView("j1", "A");
        for (let i = 0; i < RECORDING.events.length; i++) {
            applyEvents(incremental, { state: "running", events: [RECORDING.events[i]] });
        }
        const replay = new BlockView("j1", "A");
        applyEvents(replay, { state: "running", events: RECORDING.events });
        expect(replay.fetched).toBe(incremental.fetched);
        expect(replay.available).toBe(incremental.available);
        expect(Array.from(replay.slots)).toEqual(Array.from(incremental.slots));
        expect(renderBlockCard(replay)).toBe(renderBlockCard(incremental));
    });

    it("banner text names the block and class of the suggestion", () => {
        const doc: SuggestionDoc = {
            block_id: "A", reason: "upcoming_class", class_id: "CMSC313",
            available: 3, total: 8,
        };
        expect(bannerText(doc)).toBe("Park at block A for CMSC313: 3 of 8 slots free.");

        doc.reason = "home_block_full_fallback";
        doc.block_id = "B";
        expect(bannerText(doc))
            .toBe("Home block for CMSC313 is full. Park at block B: 3 of 8 slots free.");

        const idle: SuggestionDoc = {
            block_id: "C", reason: "no_upcoming_class_max_availability",
            class_id: null, available: 5, total: 9,
        };
        expect(bannerText(idle))
            .toBe("No class coming up. Block C has the most room: 5 of 9 slots free.");

        const none: SuggestionDoc = {
            block_id: null, reason: "no_availability", class_id: null,
            available: 0, total: 0,
        };
        expect(bannerText(none)).toBe("No open slots in any block right now.");
    });
});
