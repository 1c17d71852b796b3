#include "nearfield/snapshot_io.hpp"

#include "test_util.hpp"

#include <catch2/catch.hpp>

#include <filesystem>

using namespace nearfield;
using namespace testutil;

namespace {
const UlaGeometry kGeom(11, 0.5, 0.06);

SnapshotMatrix sample_block() {
    const ScenarioConfig config = make_scenario(kGeom, {{30.0, 13.3}, {55.0, 30.0}}, 5.0,
                                                17, 404, small_mc_spec());
    return generate_snapshots(config);
}
}  // namespace

TEST_CASE("complex token round trip is bit exact", "[snapshot_io]") {
    for (int trial = 0; trial < 100; ++trial) {
        const cxd z(uniform(-10.0, 10.0) * std::pow(10.0, uniform(-12.0, 12.0)),
                    uniform(-10.0, 10.0) * std::pow(10.0, uniform(-12.0, 12.0)));
        const cxd back = parse_complex(format_complex(z));
        CHECK(back.real() == z.real());
        CHECK(back.imag() == z.imag());
    }
    CHECK(parse_complex("1+0j") == cxd(1.0, 0.0));
    CHECK(parse_complex("0.31-0.42j") == cxd(0.31, -0.42));
    CHECK(parse_complex("-1.5e-3+2E+4j") == cxd(-1.5e-3, 2e4));
}

TEST_CASE("malformed complex tokens are rejected", "[snapshot_io]") {
    CHECK_THROWS_AS(parse_complex("1+2"), ParseError);
    CHECK_THROWS_AS(parse_complex("abcj"), ParseError);
    CHECK_THROWS_AS(parse_complex(""), ParseError);
    CHECK_THROWS_AS(parse_complex("1.5j"), ParseError);
}

TEST_CASE("snapshot export/import round trip is bit identical", "[snapshot_io]") {
    const SnapshotMatrix y = sample_block();
    const std::string serialized = serialize_snapshots(y);
    const SnapshotMatrix back = parse_snapshots(serialized, kGeom);
    CHECK(back.data == y.data);
    CHECK(back.provenance == Provenance::imported);
    CHECK(serialize_snapshots(back) == serialized);

    const std::string path = (std::filesystem::temp_directory_path() /
                              "nearfield_snapshot_roundtrip.csv").string();
    export_snapshots(path, y);
    const SnapshotMatrix from_file = import_snapshots(path, kGeom);
    CHECK(from_file.data == y.data);
    std::filesystem::remove(path);
}

TEST_CASE("snapshot import rejects geometry mismatches", "[snapshot_io]") {
    const SnapshotMatrix y = sample_block();
    const std::string serialized = serialize_snapshots(y);
    const UlaGeometry wrong(13, 0.5, 0.06);
    CHECK_THROWS_WITH(parse_snapshots(serialized, wrong),
                      Catch::Contains("M=11") && Catch::Contains("M=13"));
}

TEST_CASE("snapshot import names the offending cell", "[snapshot_io]") {
    UlaGeometry small(3, 0.5, 0.06);
    std::string content = "# M=3 L=7 lambda_m=0.06\n";
    for (int row = 0; row < 3; ++row) {
        std::string line;
        for (int col = 0; col < 7; ++col) {
            if (col) line += ',';
            line += (row == 2 && col == 6) ? "oops" : "1+0j";
        }
        content += line + "\n";
    }
    CHECK_THROWS_WITH(parse_snapshots(content, small), Catch::Contains("(3,7)"));
}

TEST_CASE("snapshot import rejects wrong row and column counts", "[snapshot_io]") {
    UlaGeometry small(3, 0.5, 0.06);
    const std::string header = "# M=3 L=2 lambda_m=0.06\n";
    CHECK_THROWS_WITH(parse_snapshots(header + "1+0j,1+0j\n1+0j,1+0j\n", small),
                      Catch::Contains("2 data rows"));
    CHECK_THROWS_WITH(
        parse_snapshots(header + "1+0j,1+0j\n1+0j,1+0j\n1+0j\n", small),
        Catch::Contains("row 3"));
    CHECK_THROWS_AS(parse_snapshots("no header\n", small), ParseError);
}

TEST_CASE("comment lines after the header are tolerated", "[snapshot_io]") {
    UlaGeometry small(3, 0.5, 0.06);
    const std::string content =
        "# M=3 L=1 lambda_m=0.06\n# manifest=run.json\n1+0j\n2+0j\n3+0j\n";
    const SnapshotMatrix y = parse_snapshots(content, small);
    CHECK(y.data(2, 0) == cxd(3.0, 0.0));
}

TEST_CASE("atomic write replaces files without partial content", "[snapshot_io]") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "nearfield_atomic.txt").string();
    atomic_write_file(path, "first");
    atomic_write_file(path, "second");
    CHECK(read_file(path) == "second");
    std::filesystem::remove(path);
}
