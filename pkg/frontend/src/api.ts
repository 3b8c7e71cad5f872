// Thin client for the parkwatch HTTP API. Every non-2xx response carries
// a JSON body of the form {error_code, message}; requests surface those as
// ApiError so callers can branch on the code without inspecting status lines.

export interface ClassDoc {
    class_id: string;
    title: string;
    days: string[];
    start_time: number;
    end_time: number;
    home_block: string;
    enrolled?: boolean;
}

export interface JobRef {
    job_id: string;
    block_id: string;
}

export interface JobEvent {
    frame: number;
    slot_id: number;
    state: string;
    available: number;
    total: number;
}

export interface SlotDoc {
    slot_id: number;
    state: string;
    since_frame: number;
}

export interface FinalDoc {
    frame: number;
    available: number;
    total: number;
    states: SlotDoc[];
}

export interface JobEventsDoc {
    state: string;
    events: JobEvent[];
    final?: FinalDoc;
    error?: string;
}

export interface SuggestionDoc {
    block_id: string | null;
    reason: string;
    class_id: string | null;
    available: number;
    total: number;
}

export class ApiError extends Error {
    constructor(public status: number, public errorCode: string, message: string) {
        super(message);
    }
}

async function request(method: string, path: string, body?: unknown): Promise<any> {
    const init: RequestInit = { method };
    if (body !== undefined) {
        init.headers = { "Content-Type": "application/json" };
        init.body = JSON.stringify(body);
    }
    const response = await fetch(path, init);
    let doc: any = null;
    try {
        doc = await response.json();
    } catch {
        doc = null;
    }
    if (!response.ok) {
        const code = doc && doc.error_code ? doc.error_code : "unknown";
        const message = doc && doc.message ? doc.message : response.statusText;
        throw new ApiError(response.status, code, message);
    }
    return doc;
}

export function register(username: string, password: string): Promise<{ username: string }> {
    return request("POST", "/api/register", { username, password });
}

export function login(username: string, password: string): Promise<{ username: string }> {
    return request("POST", "/api/login", { username, password });
}

export function fetchClasses(): Promise<{ classes: ClassDoc[] }> {
    return request("GET", "/api/classes");
}

export function fetchSchedule(): Promise<{ username: string, classes: ClassDoc[] }> {
    return request("GET", "/api/schedule");
}

export function putSchedule(selections: Record<string, boolean>):
        Promise<{ username: string, enrolled: string[] }> {
    return request("PUT", "/api/schedule", { selections });
}

export function findParking(): Promise<{ jobs: JobRef[] }> {
    return request("POST", "/api/find-parking");
}

export function fetchJobEvents(jobId: string, since: number): Promise<JobEventsDoc> {
    return request("GET", `/api/jobs/${jobId}/events?since=${since}`);
}

export function fetchSuggestion(): Promise<SuggestionDoc> {
    return request("GET", "/api/suggestion");
}
