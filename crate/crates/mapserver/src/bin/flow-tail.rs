//! Reference channel adapter: posts every line appended to a JSON-lines
//! file of communication events to a mapserver.

use std::path::PathBuf;
use std::time::Duration;

use clap::Parser;
use flow_mapserver::tail::LineTail;

#[derive(Parser)]
#[command(
    version,
    about = "Forward communication events from a growing file to a FLOW mapserver"
)]
struct Args {
    /// File with one CommunicationEvent JSON object per line.
    file: PathBuf,
    #[arg(long, env = "FLOW_URL", default_value = "http://127.0.0.1:8080")]
    url: String,
    #[arg(long, env = "FLOW_TOKEN")]
    token: Option<String>,
    /// Send the lines already in the file too.
    #[arg(long)]
    from_start: bool,
    /// Poll interval in milliseconds.
    #[arg(long, default_value_t = 500)]
    interval: u64,
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let mut tail = LineTail::new(&args.file, args.from_start)?;
    let client = reqwest::Client::new();
    let endpoint = format!("{}/events", args.url.trim_end_matches('/'));
    loop {
        for line in tail.poll()? {
            let mut req = client
                .post(&endpoint)
                .header("content-type", "application/json")
                .body(line.clone());
            if let Some(t) = &args.token {
                req = req.bearer_auth(t);
            }
            match req.send().await {
                Ok(resp) if resp.status().is_success() => {}
                Ok(resp) => {
                    let status = resp.status();
                    eprintln!(
                        "rejected ({status}): {} <- {line}",
                        resp.text().await.unwrap_or_default()
                    );
                }
                Err(e) => eprintln!("cannot reach {endpoint}: {e}"),
            }
        }
        tokio::time::sleep(Duration::from_millis(args.interval)).await;
    }
}
