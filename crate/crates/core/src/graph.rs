//! Strong connectivity of small digraphs via Tarjan's algorithm.

struct TarjanState {
    index: usize,
    stack: Vec<usize>,
    on_stack: Vec<bool>,
    idx: Vec<Option<usize>>,
    low: Vec<usize>,
    comps: Vec<Vec<usize>>,
}

/// Strongly connected components of a directed graph given as adjacency lists.
pub fn tarjan_scc(graph: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = graph.len();
    let mut state = TarjanState {
        index: 0,
        stack: Vec::new(),
        on_stack: vec![false; n],
        idx: vec![None; n],
        low: vec![0; n],
        comps: Vec::new(),
    };
    for v in 0..n {
        if state.idx[v].is_none() {
            strongconnect(v, graph, &mut state);
        }
    }
    state.comps
}

fn strongconnect(v: usize, graph: &[Vec<usize>], state: &mut TarjanState) {
    state.idx[v] = Some(state.index);
    state.low[v] = state.index;
    state.index += 1;
    state.stack.push(v);
    state.on_stack[v] = true;

    for &w in &graph[v] {
        if state.idx[w].is_none() {
            strongconnect(w, graph, state);
            state.low[v] = state.low[v].min(state.low[w]);
        } else if state.on_stack[w] {
            state.low[v] = state.low[v].min(state.idx[w].unwrap());
        }
    }

    if state.low[v] == state.idx[v].unwrap() {
        let mut comp = Vec::new();
        loop {
            let w = state.stack.pop().expect("stack underflow");
            state.on_stack[w] = false;
            comp.push(w);
            if w == v {
                break;
            }
        }
        state.comps.push(comp);
    }
}

/// A digraph is strongly connected when it has a single strongly connected
/// component; the empty and one-node graphs count vacuously.
pub fn is_strongly_connected(graph: &[Vec<usize>]) -> bool {
    graph.len() <= 1 || tarjan_scc(graph).len() == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_is_strongly_connected() {
        let g = vec![vec![1], vec![2], vec![0]];
        assert!(is_strongly_connected(&g));
    }

    #[test]
    fn one_way_bridge_is_not() {
        // Two 2-cycles joined by a single directed edge.
        let g = vec![vec![1], vec![0, 2], vec![3], vec![2]];
        assert!(!is_strongly_connected(&g));
        assert_eq!(tarjan_scc(&g).len(), 2);
    }

    #[test]
    fn single_node_is_vacuously_connected() {
        assert!(is_strongly_connected(&[Vec::new()]));
    }
}
