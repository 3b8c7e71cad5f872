// Slot marking page. Load a reference frame, click four corners per slot,
// export the slot map as JSON. The canvas keeps the image's native pixel
// grid so clicks land on integer coordinates.

import { decodePgm, GrayImage, toRgba } from "./pgm.js";
import { Marking, serializeSlotMap } from "./slotmap.js";

export class MarkingPage {
    marking = new Marking();
    private image: GrayImage | null = null;
    private ctx: CanvasRenderingContext2D;

    constructor(private canvas: HTMLCanvasElement,
                private fileInput: HTMLInputElement,
                private lotInput: HTMLInputElement,
                private counter: HTMLElement,
                private notice: HTMLElement,
                undoButton: HTMLButtonElement,
                private exportButton: HTMLButtonElement) {
        this.ctx = canvas.getContext("2d")!;
        fileInput.addEventListener("change", () => void this.loadImage());
        canvas.addEventListener("click", event => this.click(event));
        undoButton.addEventListener("click", () => {
            this.marking.undo();
            this.refresh();
        });
        exportButton.addEventListener("click", () => this.exportMap());
        this.refresh();
    }

    private async loadImage() {
        const file = this.fileInput.files?.[0];
        if (!file) {
            return;
        }
        try {
            this.image = decodePgm(await file.arrayBuffer());
        } catch (e) {
            this.notice.textContent = e instanceof Error ? e.message : String(e);
            return;
        }
        this.canvas.width = this.image.width;
        this.canvas.height = this.image.height;
        this.marking.clear();
        this.refresh();
    }

    private click(event: MouseEvent) {
        if (!this.image) {
            return;
        }
        const rect = this.canvas.getBoundingClientRect();
        const x = (event.clientX - rect.left) * (this.canvas.width / rect.width);
        const y = (event.clientY - rect.top) * (this.canvas.height / rect.height);
        this.marking.addClick(x, y);
        this.refresh();
    }

    private exportMap() {
        if (!this.image || !this.marking.complete()) {
            return;
        }
        const text = serializeSlotMap(this.lotInput.value || "A",
                                      this.image.width, this.image.height,
                                      this.marking.slots);
        const link = document.createElement("a");
        link.href = URL.createObjectURL(new Blob([text], { type: "application/json" }));
        link.download = "slotmap.json";
        link.click();
        URL.revokeObjectURL(link.href);
    }

    private refresh() {
        this.counter.textContent = `slots: ${this.marking.slotCount()}`;
        const open = this.marking.pending.length;
        this.exportButton.disabled = !this.image || open > 0;
        this.notice.textContent = open > 0
            ? `incomplete slot: ${open} of 4 corners placed`
            : "";
        this.redraw();
    }

    private redraw() {
        if (!this.image) {
            return;
        }
        const data = this.ctx.createImageData(this.image.width, this.image.height);
        data.data.set(toRgba(this.image));
        this.ctx.putImageData(data, 0, 0);
        this.ctx.lineWidth = 2;
        this.ctx.strokeStyle = "#2e9e4f";
        for (const corners of this.marking.slots) {
            this.ctx.beginPath();
            this.ctx.moveTo(corners[0].x, corners[0].y);
            for (const v of corners.slice(1)) {
                this.ctx.lineTo(v.x, v.y);
            }
            this.ctx.closePath();
            this.ctx.stroke();
        }
        this.ctx.fillStyle = "#d8a200";
        for (const v of this.marking.pending) {
            this.ctx.beginPath();
            this.ctx.arc(v.x, v.y, 4, 0, Math.PI * 2);
            this.ctx.fill();
        }
    }
}
