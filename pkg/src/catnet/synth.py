"""Seeded generator of synthetic KDD99-format connection records.

The official KDD files are not redistributable with this package, so tests
and offline runs use records drawn from hand-written per-label profiles that
mimic the well-known shape of each attack (smurf floods of 1032-byte ICMP
echo replies, SYN-flood neptune bursts with serror_rate 1, telnet sessions
gaining a root shell, ...).  U2R and R2L profiles deliberately overlap with
normal interactive sessions so that the learners do not separate every class
perfectly.  None of this is real traffic.
"""

from __future__ import annotations

import numpy as np

from .kdd_data import (
    DEFAULT_CATEGORY_MAP,
    KDD_SCHEMA,
    Category,
    Dataset,
)

# Per-label record counts in the KDD99 10% training file, normal adjusted to
# the published category total.
TEN_PERCENT_LABEL_COUNTS = {
    "normal": 97_277,
    "smurf": 280_790,
    "neptune": 107_201,
    "back": 2_203,
    "teardrop": 979,
    "pod": 264,
    "land": 21,
    "satan": 1_589,
    "ipsweep": 1_247,
    "portsweep": 1_040,
    "nmap": 231,
    "warezclient": 1_020,
    "guess_passwd": 53,
    "warezmaster": 20,
    "imap": 12,
    "ftp_write": 8,
    "multihop": 7,
    "phf": 4,
    "spy": 2,
    "buffer_overflow": 30,
    "rootkit": 10,
    "loadmodule": 9,
    "perl": 3,
}

_SERVICES = (
    "auth", "bgp", "courier", "csnet_ns", "ctf", "daytime", "discard", "domain",
    "echo", "efs", "exec", "finger", "ftp", "ftp_data", "gopher", "hostnames",
    "http", "imap4", "iso_tsap", "klogin", "kshell", "ldap", "link", "login",
    "mtp", "name", "netbios_dgm", "netbios_ns", "netbios_ssn", "netstat", "nnsp",
    "nntp", "other", "pop_2", "pop_3", "printer", "private", "remote_job", "rje",
    "shell", "smtp", "sql_net", "ssh", "sunrpc", "supdup", "systat", "telnet",
    "time", "uucp", "uucp_path", "vmnet", "whois", "X11", "Z39_50",
)


class _Rows:
    """Column buffer for ``n`` records with KDD defaults (zeros, tcp, SF)."""

    def __init__(self, rng, n):
        self.rng = rng
        self.n = n
        self.cols = {}
        for d in KDD_SCHEMA:
            if d.is_continuous:
                self.cols[d.name] = np.zeros(n)
            else:
                self.cols[d.name] = np.full(n, "0", dtype=object)
        self.cols["protocol_type"][:] = "tcp"
        self.cols["flag"][:] = "SF"
        self.cols["service"][:] = "private"

    def __setitem__(self, name, value):
        col = self.cols[name]
        if col.dtype == object:
            col[:] = value
        else:
            col[:] = np.asarray(value, dtype=float)

    def __getitem__(self, name):
        return self.cols[name]

    # -- samplers -----------------------------------------------------------

    def pick(self, values, p=None):
        p = None if p is None else np.asarray(p, dtype=float) / np.sum(p)
        idx = self.rng.choice(len(values), size=self.n, p=p)
        return np.asarray(values, dtype=object)[idx]

    def lognorm(self, median, sigma, lo=0, hi=None):
        v = np.round(median * np.exp(sigma * self.rng.standard_normal(self.n)))
        return np.clip(v, lo, hi if hi is not None else np.inf)

    def ints(self, lo, hi):
        return self.rng.integers(lo, hi + 1, size=self.n).astype(float)

    def rate(self, center, spread=0.0):
        v = center + spread * self.rng.standard_normal(self.n)
        return np.round(np.clip(v, 0.0, 1.0), 2)

    def coin(self, p):
        return self.rng.random(self.n) < p

    def window(self, count, srv_count=None, dst_host_count=None, dst_host_srv_count=None):
        self["count"] = count
        self["srv_count"] = count if srv_count is None else srv_count
        if dst_host_count is not None:
            self["dst_host_count"] = dst_host_count
        if dst_host_srv_count is not None:
            self["dst_host_srv_count"] = dst_host_srv_count


def _normal(r: _Rows):
    svc = r.pick(
        ["http", "smtp", "ftp_data", "domain_u", "private", "ecr_i", "urp_i", "ftp",
         "telnet", "finger", "pop_3", "other", "auth", "imap4", "ntp_u", "eco_i"],
        [55, 12, 9, 7, 4, 1.5, 1.5, 2, 2, 1, 1, 1, 1, 0.5, 1, 0.5],
    )
    r["service"] = svc
    proto = np.where(np.isin(svc, ["domain_u", "private", "ntp_u"]), "udp",
                     np.where(np.isin(svc, ["ecr_i", "urp_i", "eco_i"]), "icmp", "tcp"))
    r["protocol_type"] = proto
    tcp = proto == "tcp"
    r["flag"] = np.where(tcp, r.pick(["SF", "REJ", "S0", "RSTO", "S1", "RSTR"],
                                     [93, 2.5, 1.5, 1, 1, 1]), "SF")
    r["logged_in"] = np.where(tcp & (r["flag"] == "SF") & r.coin(0.95), "1", "0")
    r["src_bytes"] = np.select(
        [svc == "http", svc == "smtp", svc == "ftp_data", ~tcp],
        [r.lognorm(240, 0.35), r.lognorm(900, 0.7), r.lognorm(600, 1.8), r.lognorm(60, 0.6)],
        r.lognorm(300, 1.2),
    )
    r["dst_bytes"] = np.select(
        [svc == "http", svc == "smtp", svc == "ftp_data", ~tcp],
        [r.lognorm(2500, 1.0), r.lognorm(330, 0.3), np.where(r.coin(0.7), 0, r.lognorm(2000, 2)),
         r.lognorm(90, 0.6)],
        r.lognorm(1500, 1.3),
    )
    interactive = np.isin(svc, ["telnet", "ftp"])
    r["duration"] = np.where(interactive | r.coin(0.04), r.lognorm(60, 2.0), 0)
    r["hot"] = np.where(interactive, r.ints(0, 4), np.where(r.coin(0.02), r.ints(1, 6), 0))
    r["num_failed_logins"] = np.where(interactive & r.coin(0.05), 1, 0)
    r["root_shell"] = np.where(interactive & r.coin(0.08), 1, 0)
    r["su_attempted"] = np.where(interactive & r.coin(0.03), 1, 0)
    r["num_root"] = np.where(r["root_shell"] > 0, r.ints(1, 8), 0)
    r["num_file_creations"] = np.where(interactive & r.coin(0.2), r.ints(1, 4), 0)
    r["num_shells"] = np.where(interactive & r.coin(0.05), 1, 0)
    r["num_access_files"] = np.where(interactive & r.coin(0.1), r.ints(1, 2), 0)
    r["num_compromised"] = np.where(interactive & r.coin(0.1), r.ints(1, 3), 0)
    r["is_guest_login"] = np.where((svc == "ftp") & r.coin(0.1), "1", "0")
    count = np.where(r.coin(0.9), r.lognorm(4, 1.0, 1, 120), r.ints(1, 511))
    r.window(count, np.clip(count + r.ints(-3, 10), 1, 511),
             r.ints(1, 255), np.where(r.coin(0.6), 255, r.ints(1, 255)))
    err = ~np.isin(r["flag"], ["SF", "S1"])
    r["serror_rate"] = np.where(r["flag"] == "S0", r.rate(0.6, 0.3), r.rate(0.0, 0.03))
    r["srv_serror_rate"] = r["serror_rate"]
    r["rerror_rate"] = np.where(err & (r["flag"] != "S0"), r.rate(0.6, 0.3), r.rate(0.0, 0.03))
    r["srv_rerror_rate"] = r["rerror_rate"]
    r["same_srv_rate"] = r.rate(0.95, 0.1)
    r["diff_srv_rate"] = r.rate(0.03, 0.05)
    r["srv_diff_host_rate"] = r.rate(0.1, 0.15)
    r["dst_host_same_srv_rate"] = r.rate(0.85, 0.25)
    r["dst_host_diff_srv_rate"] = r.rate(0.03, 0.05)
    r["dst_host_same_src_port_rate"] = r.rate(0.1, 0.15)
    r["dst_host_srv_diff_host_rate"] = r.rate(0.03, 0.05)
    r["dst_host_serror_rate"] = np.where(r["flag"] == "S0", r.rate(0.5, 0.3), r.rate(0.0, 0.03))
    r["dst_host_srv_serror_rate"] = r["dst_host_serror_rate"]
    r["dst_host_rerror_rate"] = np.where(err, r.rate(0.4, 0.3), r.rate(0.02, 0.05))
    r["dst_host_srv_rerror_rate"] = r["dst_host_rerror_rate"]


def _smurf(r):
    r["protocol_type"] = "icmp"
    r["service"] = r.pick(["ecr_i", "urp_i"], [97, 3])
    r["src_bytes"] = r.pick([1032, 520, 1480], [85, 14, 1]).astype(float)
    count = np.where(r.coin(0.85), 511, r.ints(60, 511))
    r.window(count, count, 255, 255)
    r["same_srv_rate"] = 1.0
    r["dst_host_same_srv_rate"] = 1.0
    r["dst_host_same_src_port_rate"] = r.rate(1.0, 0.02)


def _neptune(r):
    r["service"] = np.where(r.coin(0.4), "private", r.pick(_SERVICES))
    r["flag"] = r.pick(["S0", "REJ", "RSTO", "SH"], [85, 12, 2, 1])
    count = r.ints(80, 300)
    r.window(count, r.ints(1, 30), 255, r.ints(1, 30))
    s0 = r["flag"] == "S0"
    r["serror_rate"] = np.where(s0, r.rate(1.0, 0.02), 0)
    r["srv_serror_rate"] = r["serror_rate"]
    r["rerror_rate"] = np.where(~s0, r.rate(1.0, 0.02), 0)
    r["srv_rerror_rate"] = r["rerror_rate"]
    r["same_srv_rate"] = r.rate(0.05, 0.03)
    r["diff_srv_rate"] = r.rate(0.07, 0.02)
    r["dst_host_same_srv_rate"] = r.rate(0.05, 0.03)
    r["dst_host_diff_srv_rate"] = r.rate(0.07, 0.02)
    r["dst_host_serror_rate"] = r["serror_rate"]
    r["dst_host_srv_serror_rate"] = r["serror_rate"]
    r["dst_host_rerror_rate"] = r["rerror_rate"]
    r["dst_host_srv_rerror_rate"] = r["rerror_rate"]


def _back(r):
    r["service"] = "http"
    r["flag"] = r.pick(["SF", "RSTR"], [95, 5])
    r["logged_in"] = "1"
    r["src_bytes"] = 54540
    r["dst_bytes"] = r.pick([8314, 7300, 0], [80, 15, 5]).astype(float)
    r["hot"] = 2
    r["num_compromised"] = 1
    r["duration"] = np.where(r.coin(0.2), r.ints(1, 15), 0)
    r.window(r.ints(1, 12), r.ints(1, 12), r.ints(1, 255), r.ints(10, 255))
    r["same_srv_rate"] = 1.0
    r["dst_host_same_srv_rate"] = r.rate(0.9, 0.1)


def _teardrop(r):
    r["protocol_type"] = "udp"
    r["wrong_fragment"] = 3
    r["src_bytes"] = 28
    c = r.ints(1, 100)
    r.window(c, c, r.ints(1, 255), r.ints(1, 255))
    r["same_srv_rate"] = 1.0


def _pod(r):
    r["protocol_type"] = "icmp"
    r["service"] = "ecr_i"
    r["wrong_fragment"] = 1
    r["src_bytes"] = 1480
    r.window(r.ints(1, 10), r.ints(1, 10), r.ints(1, 255), r.ints(1, 255))
    r["same_srv_rate"] = 1.0


def _land(r):
    r["service"] = r.pick(["finger", "telnet", "http", "private"])
    r["flag"] = "S0"
    r["land"] = "1"
    r.window(1, 1, r.ints(1, 255), r.ints(1, 10))
    r["serror_rate"] = 1.0
    r["srv_serror_rate"] = 1.0
    r["same_srv_rate"] = 1.0


def _ipsweep(r):
    r["protocol_type"] = "icmp"
    r["service"] = r.pick(["eco_i", "ecr_i"], [90, 10])
    r["src_bytes"] = r.pick([8, 18, 20], [60, 35, 5]).astype(float)
    r.window(r.ints(1, 3), r.ints(1, 40), r.ints(1, 120), r.ints(1, 60))
    r["same_srv_rate"] = 1.0
    r["srv_diff_host_rate"] = r.rate(0.9, 0.15)
    r["dst_host_same_srv_rate"] = r.rate(1.0, 0.05)
    r["dst_host_same_src_port_rate"] = r.rate(0.95, 0.1)
    r["dst_host_srv_diff_host_rate"] = r.rate(0.55, 0.25)


def _nmap(r):
    r["protocol_type"] = r.pick(["icmp", "tcp", "udp"], [40, 45, 15])
    r["service"] = np.where(r["protocol_type"] == "icmp", "eco_i", r.pick(["private", "other", "http", "ftp"], [70, 20, 5, 5]))
    r["flag"] = np.where(r["protocol_type"] == "tcp", r.pick(["SH", "S0", "RSTO", "SF"], [40, 30, 15, 15]), "SF")
    r["src_bytes"] = np.where(r.coin(0.5), 0, r.ints(1, 30))
    r.window(r.ints(1, 3), r.ints(1, 3), r.ints(1, 255), r.ints(1, 40))
    r["same_srv_rate"] = r.rate(0.8, 0.2)
    r["dst_host_diff_srv_rate"] = r.rate(0.6, 0.3)
    r["dst_host_same_src_port_rate"] = r.rate(0.8, 0.25)
    r["dst_host_serror_rate"] = np.where(r["flag"] == "S0", r.rate(0.5, 0.3), 0)


def _portsweep(r):
    r["service"] = np.where(r.coin(0.85), "private", r.pick(_SERVICES))
    r["flag"] = r.pick(["REJ", "RSTR", "SF", "RSTOS0"], [40, 40, 15, 5])
    r["duration"] = np.where(r.coin(0.2), r.lognorm(3000, 1.0), 0)
    r.window(r.ints(1, 3), r.ints(1, 3), r.ints(1, 255), r.ints(1, 4))
    r["rerror_rate"] = r.rate(0.5, 0.4)
    r["srv_rerror_rate"] = r.rate(0.95, 0.1)
    r["same_srv_rate"] = r.rate(0.9, 0.2)
    r["dst_host_same_srv_rate"] = r.rate(0.05, 0.1)
    r["dst_host_diff_srv_rate"] = r.rate(0.3, 0.3)
    r["dst_host_same_src_port_rate"] = r.rate(0.95, 0.1)
    r["dst_host_rerror_rate"] = r.rate(0.75, 0.25)
    r["dst_host_srv_rerror_rate"] = r.rate(0.9, 0.15)


def _satan(r):
    r["protocol_type"] = r.pick(["tcp", "udp", "icmp"], [90, 7, 3])
    r["service"] = r.pick(_SERVICES)
    r["flag"] = np.where(r["protocol_type"] == "tcp", r.pick(["REJ", "S0", "SF", "RSTO", "RSTR"], [60, 15, 10, 10, 5]), "SF")
    r["src_bytes"] = np.where(r.coin(0.8), 0, r.ints(1, 60))
    c = np.where(r.coin(0.5), r.ints(1, 10), r.ints(100, 500))
    r.window(c, r.ints(1, 20), r.ints(1, 255), r.ints(1, 30))
    r["rerror_rate"] = np.where(r["flag"] == "REJ", r.rate(0.85, 0.2), r.rate(0.2, 0.2))
    r["srv_rerror_rate"] = r.rate(0.7, 0.3)
    r["serror_rate"] = np.where(r["flag"] == "S0", r.rate(0.5, 0.3), 0)
    r["same_srv_rate"] = r.rate(0.1, 0.1)
    r["diff_srv_rate"] = r.rate(0.6, 0.3)
    r["dst_host_same_srv_rate"] = r.rate(0.05, 0.05)
    r["dst_host_diff_srv_rate"] = r.rate(0.7, 0.25)
    r["dst_host_rerror_rate"] = r.rate(0.8, 0.2)
    r["dst_host_srv_rerror_rate"] = r.rate(0.6, 0.3)


def _u2r(r):
    r["service"] = r.pick(["telnet", "ftp_data", "login", "ftp"], [65, 20, 10, 5])
    r["logged_in"] = "1"
    r["duration"] = r.lognorm(90, 1.8)
    r["src_bytes"] = r.lognorm(1200, 1.2)
    r["dst_bytes"] = r.lognorm(3500, 1.2)
    r["hot"] = r.ints(0, 4)
    r["root_shell"] = np.where(r.coin(0.55), 1, 0)
    r["num_root"] = np.where(r["root_shell"] > 0, r.ints(1, 8), 0)
    r["num_file_creations"] = np.where(r.coin(0.5), r.ints(1, 4), 0)
    r["num_shells"] = np.where(r.coin(0.2), 1, 0)
    r["num_compromised"] = np.where(r.coin(0.3), r.ints(1, 3), 0)
    r["num_access_files"] = np.where(r.coin(0.2), 1, 0)
    r.window(r.ints(1, 2), r.ints(1, 2), r.ints(1, 150), r.ints(1, 30))
    r["same_srv_rate"] = 1.0
    r["dst_host_same_srv_rate"] = r.rate(0.3, 0.3)
    r["dst_host_same_src_port_rate"] = r.rate(0.3, 0.3)


def _warezclient(r):
    r["service"] = r.pick(["ftp_data", "ftp"], [55, 45])
    r["logged_in"] = "1"
    ftp = r["service"] == "ftp"
    r["duration"] = np.where(r.coin(0.6), r.lognorm(200, 1.5), 0)
    r["src_bytes"] = np.where(ftp, r.lognorm(300, 1.0), r.lognorm(8000, 1.5))
    r["dst_bytes"] = np.where(ftp, r.lognorm(2500, 1.0), 0)
    r["hot"] = np.where(ftp, r.ints(0, 28), 0)
    r["is_guest_login"] = np.where(ftp & r.coin(0.7), "1", "0")
    r.window(r.ints(1, 6), r.ints(1, 6), r.ints(1, 255), r.ints(1, 60))
    r["same_srv_rate"] = 1.0
    r["dst_host_same_srv_rate"] = r.rate(0.4, 0.3)
    r["dst_host_same_src_port_rate"] = r.rate(0.5, 0.35)


def _guess_passwd(r):
    r["service"] = r.pick(["telnet", "pop_3", "imap4"], [85, 10, 5])
    r["flag"] = r.pick(["RSTO", "SF", "S3"], [60, 35, 5])
    r["src_bytes"] = r.pick([125, 126, 100], [60, 30, 10]).astype(float)
    r["dst_bytes"] = r.pick([179, 180, 0], [70, 20, 10]).astype(float)
    r["num_failed_logins"] = 1
    r["duration"] = r.ints(0, 6)
    r.window(r.ints(1, 2), r.ints(1, 2), r.ints(1, 255), r.ints(1, 10))
    r["same_srv_rate"] = 1.0
    r["dst_host_rerror_rate"] = r.rate(0.3, 0.3)


def _warezmaster(r):
    r["service"] = "ftp"
    r["logged_in"] = "1"
    r["is_guest_login"] = np.where(r.coin(0.8), "1", "0")
    r["duration"] = r.lognorm(2000, 1.5)
    r["src_bytes"] = r.lognorm(600, 1.0)
    r["dst_bytes"] = r.lognorm(2_000_000, 1.5)
    r["hot"] = r.ints(0, 25)
    r.window(1, 1, r.ints(1, 30), r.ints(1, 20))
    r["same_srv_rate"] = 1.0


def _imap(r):
    r["service"] = "imap4"
    r["flag"] = r.pick(["SF", "S0", "SH", "RSTO"], [40, 30, 20, 10])
    r["src_bytes"] = r.lognorm(1500, 2.0)
    r["dst_bytes"] = r.lognorm(800, 2.0)
    r["root_shell"] = np.where(r.coin(0.3), 1, 0)
    r.window(r.ints(1, 5), r.ints(1, 5), r.ints(1, 255), r.ints(1, 20))
    r["same_srv_rate"] = 1.0


def _interactive_r2l(r):
    # ftp_write, multihop, phf, spy
    r["service"] = r.pick(["ftp", "ftp_data", "telnet", "http"], [30, 25, 30, 15])
    r["logged_in"] = "1"
    r["duration"] = r.lognorm(400, 2.0)
    r["src_bytes"] = r.lognorm(700, 1.5)
    r["dst_bytes"] = r.lognorm(3000, 1.5)
    r["hot"] = r.ints(0, 6)
    r["num_file_creations"] = np.where(r.coin(0.4), r.ints(1, 3), 0)
    r["num_access_files"] = np.where(r.coin(0.3), 1, 0)
    r["root_shell"] = np.where(r.coin(0.15), 1, 0)
    r.window(r.ints(1, 3), r.ints(1, 3), r.ints(1, 100), r.ints(1, 20))
    r["same_srv_rate"] = 1.0
    r["dst_host_same_srv_rate"] = r.rate(0.3, 0.3)


_PROFILES = {
    "normal": _normal,
    "smurf": _smurf,
    "neptune": _neptune,
    "back": _back,
    "teardrop": _teardrop,
    "pod": _pod,
    "land": _land,
    "satan": _satan,
    "ipsweep": _ipsweep,
    "portsweep": _portsweep,
    "nmap": _nmap,
    "warezclient": _warezclient,
    "guess_passwd": _guess_passwd,
    "warezmaster": _warezmaster,
    "imap": _imap,
    "ftp_write": _interactive_r2l,
    "multihop": _interactive_r2l,
    "phf": _interactive_r2l,
    "spy": _interactive_r2l,
    "buffer_overflow": _u2r,
    "rootkit": _u2r,
    "loadmodule": _u2r,
    "perl": _u2r,
}


def _profile_for(label):
    try:
        return _PROFILES[label]
    except KeyError:
        raise ValueError(f"no synthetic profile for label {label!r}") from None


def generate(label_counts: dict[str, int], seed: int = 0) -> Dataset:
    """Synthesize ``label_counts[label]`` records per raw label, shuffled.

    Deterministic in ``seed``; labels are processed in sorted order so the
    result does not depend on dict ordering.
    """
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for label in sorted(label_counts):
        n = int(label_counts[label])
        if n <= 0:
            continue
        rows = _Rows(rng, n)
        _profile_for(label)(rows)
        blocks.append(rows)
        labels.append(np.full(n, label, dtype=object))
    if not blocks:
        return Dataset.empty()
    total = sum(b.n for b in blocks)
    cont = np.concatenate(
        [np.stack([b[KDD_SCHEMA[i].name] for i in KDD_SCHEMA.continuous_index], axis=1) for b in blocks]
    )
    vocab, codes = [], []
    for i in KDD_SCHEMA.symbolic_index:
        col = np.concatenate([b[KDD_SCHEMA[i].name] for b in blocks]).astype(str)
        values, inverse = np.unique(col, return_inverse=True)
        vocab.append(tuple(values.tolist()))
        codes.append(inverse)
    order = rng.permutation(total)
    ds = Dataset(KDD_SCHEMA, cont[order], np.stack(codes, axis=1)[order], vocab,
                 np.concatenate(labels)[order], category_map=DEFAULT_CATEGORY_MAP)
    ds.provenance.update({"source": "synthetic", "seed": seed})
    return ds


def category_label_counts(per_category: dict[Category, int]) -> dict[str, int]:
    """Spread per-category totals over the category's labels in proportion to
    their 10%-file frequencies (largest remainder)."""
    from .kdd_data import largest_remainder

    out = {}
    for cat, total in per_category.items():
        weights = {l: c for l, c in TEN_PERCENT_LABEL_COUNTS.items()
                   if DEFAULT_CATEGORY_MAP[l] == cat}
        out.update(largest_remainder(int(total), weights))
    return {l: c for l, c in out.items() if c}


def ten_percent_like(seed: int = 0) -> Dataset:
    """A synthetic stand-in for ``kddcup.data_10_percent`` with the same
    per-label (and hence per-category) counts."""
    return generate(TEN_PERCENT_LABEL_COUNTS, seed)
