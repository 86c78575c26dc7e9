// Certainty time-series for one task: a dot per decision, colored by the
// server's verdict, with the current threshold drawn as a horizontal line.

import type { TaskPoint } from "./model.js"

const SVG_NS = "http://www.w3.org/2000/svg"
const WIDTH = 640
const HEIGHT = 220
const PAD = { left: 42, right: 10, top: 10, bottom: 22 }

function yFor(certainty: number): number {
    const span = HEIGHT - PAD.top - PAD.bottom
    return PAD.top + (1 - certainty) * span
}

export function drawSeries(
    svg: SVGSVGElement,
    points: TaskPoint[],
    threshold: number,
    windowSize = 120,
): void {
    svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`)
    while (svg.firstChild) svg.removeChild(svg.firstChild)

    const axis = document.createElementNS(SVG_NS, "g")
    axis.setAttribute("class", "axis")
    for (const tick of [0, 0.25, 0.5, 0.75, 1.0]) {
        const y = yFor(tick)
        const line = document.createElementNS(SVG_NS, "line")
        line.setAttribute("x1", String(PAD.left))
        line.setAttribute("x2", String(WIDTH - PAD.right))
        line.setAttribute("y1", String(y))
        line.setAttribute("y2", String(y))
        line.setAttribute("class", "gridline")
        axis.appendChild(line)
        const label = document.createElementNS(SVG_NS, "text")
        label.setAttribute("x", "4")
        label.setAttribute("y", String(y + 4))
        label.textContent = tick.toFixed(2)
        axis.appendChild(label)
    }
    svg.appendChild(axis)

    const thresholdLine = document.createElementNS(SVG_NS, "line")
    thresholdLine.setAttribute("class", "threshold-line")
    thresholdLine.setAttribute("data-threshold", String(threshold))
    thresholdLine.setAttribute("x1", String(PAD.left))
    thresholdLine.setAttribute("x2", String(WIDTH - PAD.right))
    thresholdLine.setAttribute("y1", String(yFor(threshold)))
    thresholdLine.setAttribute("y2", String(yFor(threshold)))
    svg.appendChild(thresholdLine)

    const visible = points.slice(-windowSize)
    const plot = document.createElementNS(SVG_NS, "g")
    plot.setAttribute("class", "points")
    const span = WIDTH - PAD.left - PAD.right
    visible.forEach((point, i) => {
        const x = PAD.left + (visible.length === 1 ? span / 2 : (i / (visible.length - 1)) * span)
        const dot = document.createElementNS(SVG_NS, "circle")
        dot.setAttribute("class", `point verdict-${point.verdict}`)
        dot.setAttribute("data-cycle", String(point.cycle))
        dot.setAttribute("data-class", String(point.classLabel))
        dot.setAttribute("cx", String(x))
        dot.setAttribute("cy", String(yFor(point.certainty)))
        dot.setAttribute("r", "4")
        const title = document.createElementNS(SVG_NS, "title")
        title.textContent =
            `cycle ${point.cycle}: class ${point.classLabel}, ` +
            `certainty ${point.certainty.toFixed(2)} (${point.verdict})`
        dot.appendChild(title)
        plot.appendChild(dot)
    })
    svg.appendChild(plot)
}
