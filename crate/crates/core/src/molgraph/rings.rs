use super::MolecularGraph;

/// Flags every edge that lies on a cycle, i.e. every edge that is not a bridge
/// of the graph formed by the union of all relations.
///
/// Iterative depth-first search with low-link values; the tree edge to the
/// parent is skipped by edge index, not by node.
pub fn detect_ring_edges(graph: &MolecularGraph) -> Vec<bool> {
    let m = graph.num_nodes();
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    for (e, edge) in graph.edges().iter().enumerate() {
        incident[edge.source].push((edge.target, e));
        incident[edge.target].push((edge.source, e));
    }

    let mut in_ring = vec![true; graph.num_edges()];
    let mut disc = vec![usize::MAX; m];
    let mut low = vec![0usize; m];
    let mut clock = 0;
    // (node, edge used to reach it, next incident position)
    let mut stack: Vec<(usize, Option<usize>, usize)> = Vec::new();

    for root in 0..m {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = clock;
        low[root] = clock;
        clock += 1;
        stack.push((root, None, 0));

        while let Some(frame) = stack.last_mut() {
            let (node, via, pos) = *frame;
            if let Some(&(next, e)) = incident[node].get(pos) {
                frame.2 += 1;
                if Some(e) == via {
                    continue;
                }
                if disc[next] == usize::MAX {
                    disc[next] = clock;
                    low[next] = clock;
                    clock += 1;
                    stack.push((next, Some(e), 0));
                } else {
                    low[node] = low[node].min(disc[next]);
                }
            } else {
                stack.pop();
                if let (Some(e), Some(&(parent, _, _))) = (via, stack.last()) {
                    low[parent] = low[parent].min(low[node]);
                    if low[node] > disc[parent] {
                        in_ring[e] = false;
                    }
                }
            }
        }
    }
    in_ring
}
