// Slot-marking model. Clicks accumulate into quadrilaterals, four corners
// per slot in click order, and the export serializer writes the same compact
// JSON the command-line marking tool produces so either path feeds detection.

export interface Vertex {
    x: number;
    y: number;
}

export class Marking {
    pending: Vertex[] = [];
    slots: Vertex[][] = [];

    addClick(x: number, y: number) {
        this.pending.push({ x: Math.round(x), y: Math.round(y) });
        if (this.pending.length === 4) {
            this.slots.push(this.pending);
            this.pending = [];
        }
    }

    // Inverse of addClick: drop the newest corner, reopening the last
    // completed slot when no corner is pending.
    undo() {
        if (this.pending.length > 0) {
            this.pending.pop();
        } else if (this.slots.length > 0) {
            this.pending = this.slots.pop()!;
            this.pending.pop();
        }
    }

    clear() {
        this.pending = [];
        this.slots = [];
    }

    slotCount(): number {
        return this.slots.length;
    }

    // Export is only meaningful when every started slot has all four corners.
    complete(): boolean {
        return this.pending.length === 0;
    }
}

export function serializeSlotMap(lotId: string, width: number, height: number,
                                 slots: Vertex[][]): string {
    return JSON.stringify({
        lot_id: lotId,
        image_width: width,
        image_height: height,
        slots: slots.map((corners, i) => ({
            slot_id: i + 1,
            points: corners.map(v => [v.x, v.y]),
        })),
    });
}
