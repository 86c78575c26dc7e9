import { describe, expect, it } from "vitest"

import { drawSeries } from "../src/chart.js"
import type { TaskPoint } from "../src/model.js"

function makeSvg(): SVGSVGElement {
    return document.createElementNS("http://www.w3.org/2000/svg", "svg")
}

function point(cycle: number, certainty: number, verdict: "certain" | "uncertain"): TaskPoint {
    return { cycle, certainty, verdict, classLabel: 3, threshold: 0.8 }
}

describe("certainty chart", () => {
    it("draws one dot per decision, colored by the server verdict", () => {
        const svg = makeSvg()
        const points = [
            ...Array(7).fill(0).map((_, i) => point(i, 0.95, "certain")),
            ...Array(3).fill(0).map((_, i) => point(7 + i, 0.5, "uncertain")),
        ]
        drawSeries(svg, points, 0.8)
        expect(svg.querySelectorAll("circle.point")).toHaveLength(10)
        expect(svg.querySelectorAll("circle.verdict-certain")).toHaveLength(7)
        expect(svg.querySelectorAll("circle.verdict-uncertain")).toHaveLength(3)
    })

    it("places the threshold line at the right height", () => {
        const svg = makeSvg()
        drawSeries(svg, [point(0, 1.0, "certain")], 0.8)
        const line = svg.querySelector("line.threshold-line")!
        expect(line.getAttribute("data-threshold")).toBe("0.8")
        const y8 = Number(line.getAttribute("y1"))
        drawSeries(svg, [point(0, 1.0, "certain")], 0.5)
        const y5 = Number(
            svg.querySelector("line.threshold-line")!.getAttribute("y1"),
        )
        expect(y5).toBeGreaterThan(y8) // lower threshold sits lower on screen
    })

    it("higher certainty plots higher up", () => {
        const svg = makeSvg()
        drawSeries(svg, [point(0, 0.3, "uncertain"), point(1, 0.9, "certain")], 0.8)
        const dots = svg.querySelectorAll("circle.point")
        const yLow = Number(dots[0].getAttribute("cy"))
        const yHigh = Number(dots[1].getAttribute("cy"))
        expect(yHigh).toBeLessThan(yLow)
    })

    it("windows long series to the newest points", () => {
        const svg = makeSvg()
        const points = [...Array(300).keys()].map((i) => point(i, 0.9, "certain"))
        drawSeries(svg, points, 0.8, 120)
        const dots = svg.querySelectorAll("circle.point")
        expect(dots).toHaveLength(120)
        expect(dots[0].getAttribute("data-cycle")).toBe("180")
    })
})
