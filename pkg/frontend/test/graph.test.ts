import { describe, expect, it } from "vitest"

import { renderTopology, visibleNodes } from "../src/graph.js"
import { defaultSnapshot } from "./helpers.js"

function makeSvg(): SVGSVGElement {
    return document.createElementNS("http://www.w3.org/2000/svg", "svg")
}

describe("topology graph", () => {
    it("renders 25 agents for the default wiring (UI agent is this page)", () => {
        const snap = defaultSnapshot()
        expect(snap.topology.nodes).toHaveLength(26)
        expect(visibleNodes(snap.topology)).toHaveLength(25)
        const svg = makeSvg()
        renderTopology(svg, snap.topology)
        expect(svg.querySelectorAll("g.node")).toHaveLength(25)
    })

    it("draws an edge per subscription between visible nodes", () => {
        const snap = defaultSnapshot()
        const svg = makeSvg()
        renderTopology(svg, snap.topology)
        // decision-maker -> ui is hidden with the UI node.
        expect(svg.querySelectorAll("line.edge")).toHaveLength(
            snap.topology.edges.length - 1,
        )
        expect(
            svg.querySelector('[data-edge="PS1->aggregator"]'),
        ).not.toBeNull()
    })

    it("restyles a sensor node from its state", () => {
        const snap = defaultSnapshot()
        const svg = makeSvg()
        renderTopology(svg, snap.topology)
        let ps1 = svg.querySelector('g[data-name="PS1"]')!
        expect(ps1.getAttribute("class")).toContain("state-active")

        for (const node of snap.topology.nodes) {
            if (node.name === "PS1") node.state = "Off"
        }
        renderTopology(svg, snap.topology)
        ps1 = svg.querySelector('g[data-name="PS1"]')!
        expect(ps1.getAttribute("class")).toContain("state-off")
        expect(ps1.getAttribute("data-state")).toBe("Off")
    })

    it("re-renders without duplicating nodes", () => {
        const snap = defaultSnapshot()
        const svg = makeSvg()
        renderTopology(svg, snap.topology)
        renderTopology(svg, snap.topology)
        expect(svg.querySelectorAll("g.node")).toHaveLength(25)
    })
})
