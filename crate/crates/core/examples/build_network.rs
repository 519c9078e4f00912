//! Communication networks: random k-regular graphs, circulants, edge lists
//! and the strong-connectivity check.
//!
//! ```bash
//! cargo run -p minrule --example build_network
//! ```

use minrule::graph::{circulant, generate_k_regular, parse_edge_list, Network};

fn describe(name: &str, net: &Network) {
    let degrees: Vec<usize> = (0..net.n_agents()).map(|i| net.out_degree(i)).collect();
    println!(
        "{name:<22} agents={:<4} edges={:<4} symmetric={:<5} strongly connected={:<5} degrees {}..={}",
        net.n_agents(),
        net.n_edges(),
        net.is_symmetric(),
        net.is_strongly_connected(),
        degrees.iter().min().unwrap(),
        degrees.iter().max().unwrap(),
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Same seed, same graph.
    let a = generate_k_regular(100, 4, 7)?;
    let b = generate_k_regular(100, 4, 7)?;
    assert_eq!(a, b);
    describe("random 4-regular", &a);
    println!("  neighbors of agent 0: {:?}", a.neighbors(0)?);

    let ring = circulant(100, 4)?;
    describe("circulant ring", &ring);
    println!("  neighbors of agent 0: {:?}", ring.neighbors(0)?);

    // n * k odd has no k-regular graph.
    match generate_k_regular(5, 3, 0) {
        Ok(_) => unreachable!(),
        Err(e) => println!("k-regular(5, 3): {e}"),
    }

    // A directed cycle is strongly connected even though it is not symmetric.
    let cycle = parse_edge_list("0 1\n1 2\n2 3\n3 0\n", None, false)?;
    describe("directed 4-cycle", &cycle);

    let broken = parse_edge_list("# two islands\n0 1\n1 0\n2 3\n3 2\n", None, false)?;
    describe("two islands", &broken);
    println!("  first unreachable pairs: {:?}", &broken.unreachable_pairs()[..4]);

    print!("edge list of the 4-cycle:\n{}", cycle.to_edge_list());
    Ok(())
}
