// Find-parking dashboard. One card per block, one cell per slot, colored
// from the detection event stream. Polling keeps a per-job cursor and asks
// only for events past it, so a hard refresh can rebuild the same view by
// starting the cursors back at zero against the stored job ids.

import { JobEventsDoc, JobRef, SuggestionDoc } from "./api.js";
import * as api from "./api.js";

export const POLL_MS = 5000;
const JOBS_KEY = "parkwatch.jobs";

export class BlockView {
    state = "pending";
    slots = new Map<number, string>();
    available = 0;
    total = 0;
    fetched = 0;
    error = "";

    constructor(public jobId: string, public blockId: string) {}
}

export function applyEvents(view: BlockView, doc: JobEventsDoc) {
    view.state = doc.state;
    for (const event of doc.events) {
        view.slots.set(event.slot_id, event.state);
        view.available = event.available;
        view.total = event.total;
        view.fetched += 1;
    }
    if (doc.final) {
        view.available = doc.final.available;
        view.total = doc.final.total;
        for (const slot of doc.final.states) {
            view.slots.set(slot.slot_id, slot.state);
        }
    }
    if (doc.error) {
        view.error = doc.error;
    }
}

export function slotColor(state: string | undefined): string {
    if (state === "vacant") {
        return "green";
    }
    if (state === "occupied") {
        return "red";
    }
    return "gray";
}

export function renderBlockCard(view: BlockView): string {
    const ids = Array.from(view.slots.keys()).sort((a, b) => a - b);
    const cells = ids.map(id => {
        const color = slotColor(view.slots.get(id));
        return `<div class="cell ${color}" data-slot="${id}">${id}</div>`;
    }).join("");
    const counter = view.slots.size > 0
        ? `${view.available} / ${view.total} free`
        : "waiting for detection";
    const note = view.state === "failed"
        ? `<p class="error">detection failed: ${view.error}</p>`
        : "";
    return `<div class="block-card" data-block="${view.blockId}" data-state="${view.state}">`
        + `<h3>Block ${view.blockId}</h3>`
        + `<p class="counter">${counter}</p>`
        + `<div class="cells">${cells}</div>`
        + note
        + `</div>`;
}

export function bannerText(s: SuggestionDoc): string {
    if (s.reason === "no_availability") {
        return "No open slots in any block right now.";
    }
    const free = `${s.available} of ${s.total} slots free`;
    if (s.reason === "upcoming_class") {
        return `Park at block ${s.block_id} for ${s.class_id}: ${free}.`;
    }
    if (s.reason === "home_block_full_fallback") {
        return `Home block for ${s.class_id} is full. Park at block ${s.block_id}: ${free}.`;
    }
    return `No class coming up. Block ${s.block_id} has the most room: ${free}.`;
}

export class Dashboard {
    views: BlockView[] = [];
    private timer: number | null = null;

    constructor(private root: HTMLElement, private banner: HTMLElement) {}

    async start() {
        const got = await api.findParking();
        sessionStorage.setItem(JOBS_KEY, JSON.stringify(got.jobs));
        this.attach(got.jobs);
    }

    // Rebuild the dashboard for jobs launched before a page reload.
    resume(): boolean {
        const raw = sessionStorage.getItem(JOBS_KEY);
        if (!raw) {
            return false;
        }
        this.attach(JSON.parse(raw) as JobRef[]);
        return true;
    }

    stop() {
        if (this.timer !== null) {
            clearInterval(this.timer);
            this.timer = null;
        }
    }

    private attach(jobs: JobRef[]) {
        this.stop();
        this.views = jobs.map(job => new BlockView(job.job_id, job.block_id));
        this.banner.innerHTML = "";
        void this.poll();
        this.timer = window.setInterval(() => void this.poll(), POLL_MS);
    }

    private async poll() {
        for (const view of this.views) {
            if (view.state === "done" || view.state === "failed") {
                continue;
            }
            try {
                applyEvents(view, await api.fetchJobEvents(view.jobId, view.fetched));
            } catch (e) {
                view.state = "failed";
                view.error = e instanceof Error ? e.message : String(e);
            }
        }
        this.render();
        if (this.views.every(v => v.state === "done" || v.state === "failed")) {
            this.stop();
            await this.showSuggestion();
        }
    }

    private render() {
        this.root.innerHTML = this.views.map(renderBlockCard).join("");
    }

    private async showSuggestion() {
        try {
            const doc = await api.fetchSuggestion();
            this.banner.innerHTML = `<div class="banner">${bannerText(doc)}</div>`;
        } catch (e) {
            const message = e instanceof Error ? e.message : String(e);
            this.banner.innerHTML = `<div class="banner error">${message}</div>`;
        }
    }
}
