//! Start a surrogate daemon in-process and offload tasks to it over TCP.
//!
//! cargo run --example remote_execution

use forage::runtime::{execute_local, RemoteClient, Server};
use forage::workloads::{encode_matrix, encode_prime_index, Matrix, TaskRegistry, MATRIX_DETERMINANT, NTH_PRIME};
use forage::SurrogateContext;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = SurrogateContext::parse(include_str!("../data/descriptors/surrogate.xml"))?;
    let daemon = Server::bind("127.0.0.1:0", ctx, TaskRegistry::with_builtin())?.spawn()?;
    println!("surrogate listening on {}", daemon.addr());

    let client = RemoteClient::new(daemon.addr().to_string());
    println!("ping: {:?}", client.ping()?);

    let local = TaskRegistry::with_builtin();
    for (task, input) in [
        (NTH_PRIME, encode_prime_index(5_000)),
        (MATRIX_DETERMINANT, encode_matrix(&Matrix::random(7, 1))),
    ] {
        let remote = client.execute(task, &input)?;
        let here = execute_local(&local, task, &input)?;
        println!(
            "{task}: send {:.6}s exec {:.6}s recv {:.6}s, same output as local: {}",
            remote.timing.t_send,
            remote.timing.t_exec,
            remote.timing.t_recv,
            remote.output == here.output
        );
    }

    match client.execute("Face Detection", &[]) {
        Err(e) => println!("unknown task: {e}"),
        Ok(_) => unreachable!(),
    }
    daemon.shutdown()?;
    Ok(())
}
