// Login and registration forms. Server-side policy failures (short or
// common passwords, taken usernames) arrive as {error_code, message} and
// the message is shown verbatim.

import { ApiError } from "./api.js";
import * as api from "./api.js";

export class AuthPage {
    constructor(private form: HTMLFormElement, private notice: HTMLElement,
                private onLogin: (username: string) => void) {
        form.addEventListener("submit", event => {
            event.preventDefault();
            const action = (event.submitter as HTMLButtonElement | null)?.value;
            void this.submit(action === "register");
        });
    }

    private async submit(registerFirst: boolean) {
        const data = new FormData(this.form);
        const username = String(data.get("username") ?? "").trim();
        const password = String(data.get("password") ?? "");
        this.notice.textContent = "";
        try {
            if (registerFirst) {
                await api.register(username, password);
            }
            await api.login(username, password);
            this.onLogin(username);
        } catch (e) {
            this.notice.textContent = e instanceof ApiError
                ? e.message
                : String(e);
        }
    }
}
