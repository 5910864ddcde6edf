// Frame-grid selection logic and rendering. The grid pages at 100 frames so
// long videos stay responsive; selection is two clicks (start frame, then end
// frame), after which the caller attaches the picked step label.
export const FRAMES_PER_PAGE = 100;
/**
 * First click anchors the start frame; the second completes the range. A
 * second click at or before the anchor rejects the selection (the segment's
 * end frame must come strictly after its start frame) and clears the anchor.
 */
export function clickFrame(selection, index) {
    if (selection.anchor === null) {
        return { kind: "anchored", selection: { anchor: index } };
    }
    if (index <= selection.anchor) {
        return { kind: "rejected", reason: "end-not-after-start", selection: { anchor: null } };
    }
    return {
        kind: "range",
        startFrame: selection.anchor,
        endFrame: index,
        selection: { anchor: null },
    };
}
export function pageCount(totalFrames) {
    return Math.max(1, Math.ceil(totalFrames / FRAMES_PER_PAGE));
}
export function pageSlice(frames, page) {
    const offset = page * FRAMES_PER_PAGE;
    return { offset, frames: frames.slice(offset, offset + FRAMES_PER_PAGE) };
}
export function renderFrameGrid(container, frames, page, selection, highlights, onClick) {
    container.textContent = "";
    const { offset, frames: visible } = pageSlice(frames, page);
    for (let i = 0; i < visible.length; i++) {
        const index = offset + i;
        const ref = visible[i];
        const cell = document.createElement("div");
        cell.className = "frame-cell";
        cell.dataset.frame = String(index);
        const img = document.createElement("img");
        img.src = ref.url;
        img.loading = "lazy";
        img.alt = `frame ${index}`;
        const label = document.createElement("span");
        label.className = "frame-time";
        label.textContent = ref.time.toFixed(1) + "s";
        cell.append(img, label);
        if (selection.anchor === index) {
            cell.classList.add("anchored");
        }
        for (const h of highlights) {
            if (index >= h.startFrame && index <= h.endFrame) {
                cell.style.outline = `3px solid ${h.color}`;
                cell.classList.add("in-segment");
            }
        }
        cell.addEventListener("click", () => onClick(index));
        container.append(cell);
    }
}
