// DTOs mirroring the annotation service API (see docs/formats.md in the repo root).
/** 1..3 for the editing passes; 0 once the video is DONE. */
export function passNumber(state) {
    switch (state) {
        case "PASS1":
            return 1;
        case "PASS2":
            return 2;
        case "PASS3":
            return 3;
        case "DONE":
            return 0;
    }
}
export const WORKFLOW_ORDER = ["PASS1", "PASS2", "PASS3", "DONE"];
