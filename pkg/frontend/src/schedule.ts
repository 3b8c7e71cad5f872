// Class schedule page. Every class in the catalog gets a Yes/No toggle;
// each toggle submits the complete selection map, so the server never has
// to merge partial updates.

import { ClassDoc } from "./api.js";
import * as api from "./api.js";

export function formatTime(minutes: number): string {
    const h = Math.floor(minutes / 60);
    const m = minutes % 60;
    return `${h}:${String(m).padStart(2, "0")}`;
}

export function formatMeeting(doc: ClassDoc): string {
    return `${doc.days.join("/")} ${formatTime(doc.start_time)}-${formatTime(doc.end_time)}`;
}

export function renderClassRow(doc: ClassDoc, enrolled: boolean): string {
    const yes = enrolled ? " active" : "";
    const no = enrolled ? "" : " active";
    return `<tr data-class="${doc.class_id}">`
        + `<td>${doc.class_id}</td>`
        + `<td>${doc.title}</td>`
        + `<td>${formatMeeting(doc)}</td>`
        + `<td>block ${doc.home_block}</td>`
        + `<td><button class="toggle yes${yes}" data-enroll="yes">Yes</button>`
        + `<button class="toggle no${no}" data-enroll="no">No</button></td>`
        + `</tr>`;
}

export function renderEnrolledList(classes: ClassDoc[]): string {
    const rows = classes.filter(c => c.enrolled);
    if (rows.length === 0) {
        return "<p>No classes selected yet.</p>";
    }
    const items = rows.map(c =>
        `<li>${c.class_id} ${c.title}, ${formatMeeting(c)}</li>`).join("");
    return `<ul>${items}</ul>`;
}

export class SchedulePage {
    classes: ClassDoc[] = [];

    constructor(private table: HTMLElement, private enrolledBox: HTMLElement) {
        table.addEventListener("click", event => {
            const button = (event.target as HTMLElement).closest("button.toggle");
            if (button) {
                const row = button.closest("tr")!;
                void this.setEnrolled(row.getAttribute("data-class")!,
                                      button.getAttribute("data-enroll") === "yes");
            }
        });
    }

    async load() {
        const got = await api.fetchSchedule();
        this.classes = got.classes;
        this.render();
    }

    private async setEnrolled(classId: string, enrolled: boolean) {
        const selections: Record<string, boolean> = {};
        for (const doc of this.classes) {
            selections[doc.class_id] = doc.class_id === classId
                ? enrolled
                : Boolean(doc.enrolled);
        }
        await api.putSchedule(selections);
        for (const doc of this.classes) {
            doc.enrolled = selections[doc.class_id];
        }
        this.render();
    }

    private render() {
        this.table.innerHTML = this.classes.map(
            doc => renderClassRow(doc, Boolean(doc.enrolled))).join("");
        this.enrolledBox.innerHTML = renderEnrolledList(this.classes);
    }
}
