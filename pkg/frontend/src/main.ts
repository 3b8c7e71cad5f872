// Page shell: one section per task, a nav bar to switch between them,
// and the login form in front of everything that needs a session.

import { ApiError } from "./api.js";
import { AuthPage } from "./auth.js";
import { Dashboard } from "./dashboard.js";
import { MarkingPage } from "./marking.js";
import { SchedulePage } from "./schedule.js";

const SECTIONS = ["auth", "schedule", "dashboard", "marking"];

function byId<T extends HTMLElement>(id: string): T {
    return document.getElementById(id) as T;
}

function showSection(name: string) {
    for (const section of SECTIONS) {
        byId(section).hidden = section !== name;
    }
}

window.addEventListener("DOMContentLoaded", () => {
    const dashboard = new Dashboard(byId("blocks"), byId("banner"));
    const schedule = new SchedulePage(byId("class-rows"), byId("enrolled"));
    new MarkingPage(byId<HTMLCanvasElement>("mark-canvas"),
                    byId<HTMLInputElement>("mark-file"),
                    byId<HTMLInputElement>("mark-lot"),
                    byId("mark-counter"), byId("mark-notice"),
                    byId<HTMLButtonElement>("mark-undo"),
                    byId<HTMLButtonElement>("mark-export"));

    const open = (name: string) => {
        dashboard.stop();
        showSection(name);
        if (name === "schedule") {
            schedule.load().catch(bounceToLogin);
        }
        if (name === "dashboard" && !dashboard.resume()) {
            byId("banner").innerHTML = "";
            byId("blocks").innerHTML = "<p>Press the button to scan the lots.</p>";
        }
    };

    const bounceToLogin = (e: unknown) => {
        if (e instanceof ApiError && e.status === 401) {
            showSection("auth");
        } else {
            byId("banner").textContent = e instanceof Error ? e.message : String(e);
        }
    };

    new AuthPage(byId<HTMLFormElement>("auth-form"), byId("auth-notice"),
                 username => {
                     byId("whoami").textContent = username;
                     open("dashboard");
                 });

    document.querySelectorAll("nav button[data-section]").forEach(button => {
        button.addEventListener("click",
            () => open(button.getAttribute("data-section")!));
    });

    byId("run-detection").addEventListener("click", () => {
        byId("blocks").innerHTML = "<p>Starting detection jobs...</p>";
        dashboard.start().catch(bounceToLogin);
    });

    showSection("auth");
});
