// Agent-network panel: one SVG node per agent, one line per subscription.
// The dashboard is the User Interface agent's face, so that node is not
// drawn (25 visible agents in the default wiring).

import type { NodeInfo, TopologySnapshot } from "./types.js"

export const HIDDEN_ROLES = new Set(["UserInterface"])

const SVG_NS = "http://www.w3.org/2000/svg"
const WIDTH = 640
const HEIGHT = 560

const ROLE_COLUMNS: Record<string, number> = {
    Sensor: 70,
    Aggregator: 240,
    Predictor: 400,
    DecisionMaker: 540,
    ModelTrainer: 540,
}

export function visibleNodes(topology: TopologySnapshot): NodeInfo[] {
    return topology.nodes.filter((n) => !HIDDEN_ROLES.has(n.role))
}

interface Position {
    x: number
    y: number
}

function layout(nodes: NodeInfo[]): Map<string, Position> {
    const byRole = new Map<string, NodeInfo[]>()
    for (const node of nodes) {
        const group = byRole.get(node.role) ?? []
        group.push(node)
        byRole.set(node.role, group)
    }
    const positions = new Map<string, Position>()
    for (const [role, group] of byRole) {
        group.sort((a, b) => a.name.localeCompare(b.name))
        const x = ROLE_COLUMNS[role] ?? 320
        // DecisionMaker and ModelTrainer share the rightmost column.
        const shared = role === "ModelTrainer" || role === "DecisionMaker"
        const columnNodes = shared
            ? nodes.filter((n) => n.role === "ModelTrainer" || n.role === "DecisionMaker")
                .sort((a, b) => a.name.localeCompare(b.name))
            : group
        columnNodes.forEach((node, i) => {
            const step = HEIGHT / (columnNodes.length + 1)
            positions.set(node.name, { x, y: step * (i + 1) })
        })
    }
    return positions
}

export function renderTopology(svg: SVGSVGElement, topology: TopologySnapshot): void {
    svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`)
    while (svg.firstChild) svg.removeChild(svg.firstChild)

    const nodes = visibleNodes(topology)
    const names = new Set(nodes.map((n) => n.name))
    const positions = layout(nodes)

    const edgeGroup = document.createElementNS(SVG_NS, "g")
    edgeGroup.setAttribute("class", "edges")
    for (const [producer, consumer] of topology.edges) {
        if (!names.has(producer) || !names.has(consumer)) continue
        const from = positions.get(producer)
        const to = positions.get(consumer)
        if (!from || !to) continue
        const line = document.createElementNS(SVG_NS, "line")
        line.setAttribute("class", "edge")
        line.setAttribute("data-edge", `${producer}->${consumer}`)
        line.setAttribute("x1", String(from.x))
        line.setAttribute("y1", String(from.y))
        line.setAttribute("x2", String(to.x))
        line.setAttribute("y2", String(to.y))
        edgeGroup.appendChild(line)
    }
    svg.appendChild(edgeGroup)

    const nodeGroup = document.createElementNS(SVG_NS, "g")
    nodeGroup.setAttribute("class", "nodes")
    for (const node of nodes) {
        const pos = positions.get(node.name)!
        const g = document.createElementNS(SVG_NS, "g")
        g.setAttribute(
            "class",
            `node role-${node.role.toLowerCase()} state-${node.state.toLowerCase()}`,
        )
        g.setAttribute("data-name", node.name)
        g.setAttribute("data-state", node.state)
        const circle = document.createElementNS(SVG_NS, "circle")
        circle.setAttribute("cx", String(pos.x))
        circle.setAttribute("cy", String(pos.y))
        circle.setAttribute("r", node.role === "Sensor" ? "7" : "12")
        const label = document.createElementNS(SVG_NS, "text")
        label.setAttribute("x", String(pos.x + 12))
        label.setAttribute("y", String(pos.y + 4))
        label.textContent = node.name
        g.appendChild(circle)
        g.appendChild(label)
        nodeGroup.appendChild(g)
    }
    svg.appendChild(nodeGroup)
}
