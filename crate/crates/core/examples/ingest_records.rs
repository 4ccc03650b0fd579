//! Parse DNS log and pDNS lines, cut them into windows, and resolve label
//! priors with list precedence.

use dns_hin::ingest::{
    parse_labels, read_logs, read_pdns, window, ConflictPolicy, LabelIndex,
};

const LOGS: &str = "\
# timestamp client qname qtype rdata
1523577600\tc1\tWWW.Example.COM.\tA\t93.184.216.34
1523577610\tc2\tcdn.example.com\tCNAME\twww.example.com
1523577620\tc2\tbad.test\tA\t185.1.0.7
1523577630\tc3\tmail.example.com\tMX\tmx.example.com
1523581300\tc1\tlate.example.com\tA\t93.184.216.35
not a record
";

const PDNS: &str = r#"{"rrname":"bad.test","rrtype":"A","rdata":"185.1.0.8","time_first":1523500000,"time_last":1523600000,"count":12}
"#;

const LISTS: [&str; 2] = [
    "example.com,0,public\nbad.test,1,manual\n",
    "# local list from an earlier window\nwww.example.com,1,local,1523577000\nnew.test,1,local,1523577000\n",
];

fn main() -> dns_hin::Result<()> {
    let (logs, log_stats) = read_logs(LOGS.as_bytes()).expect("in-memory read");
    let (pdns, _) = read_pdns(PDNS.as_bytes()).expect("in-memory read");
    println!("log lines: {log_stats:?}");

    for batch in window(logs, &pdns, 3600)? {
        let names: Vec<&str> = batch.logs.iter().map(|r| r.qname.as_str()).collect();
        println!(
            "window [{}, {}): {} records {:?}, {} pDNS",
            batch.window_start,
            batch.window_end,
            batch.logs.len(),
            names,
            batch.pdns.len()
        );
    }

    let mut entries = Vec::new();
    for list in LISTS {
        entries.extend(parse_labels(list.as_bytes(), 2)?);
    }
    // public outranks local, so www.example.com stays benign
    let index = LabelIndex::new(&entries, ConflictPolicy::default());
    for name in ["www.example.com", "bad.test", "new.test", "unknown.test"] {
        println!("{name}: {:?}", index.prior(name));
    }
    Ok(())
}
