use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use csv::StringRecord;

use super::{
    DependencyRecord, Dataset, FilterReport, IngestError, PackageRecord, ReleaseRecord,
    DEFAULT_ECOSYSTEM,
};
use crate::time::{format_timestamp, parse_timestamp, Timestamp};

pub const PACKAGES_FILE: &str = "packages.csv";
pub const RELEASES_FILE: &str = "releases.csv";
pub const DEPENDENCIES_FILE: &str = "dependencies.csv";

/// Locations of the three input files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub packages: PathBuf,
    pub releases: PathBuf,
    pub dependencies: PathBuf,
}

impl DatasetPaths {
    /// The conventional file names inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            packages: dir.join(PACKAGES_FILE),
            releases: dir.join(RELEASES_FILE),
            dependencies: dir.join(DEPENDENCIES_FILE),
        }
    }
}

struct Table {
    path: String,
    columns: HashMap<String, usize>,
    rows: Vec<(u64, StringRecord)>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, IngestError> {
        let display = path.display().to_string();
        let file = File::open(path).map_err(|source| IngestError::Io {
            path: display.clone(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let headers = reader.headers().map_err(|e| csv_error(&display, e))?.clone();
        let columns = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_owned(), i))
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(&display, e))?;
            let line = record.position().map_or(0, |p| p.line());
            rows.push((line, record));
        }
        Ok(Self {
            path: display,
            columns,
            rows,
        })
    }

    fn column(&self, name: &'static str) -> Result<usize, IngestError> {
        self.columns
            .get(name)
            .copied()
            .ok_or_else(|| IngestError::MissingColumn {
                path: self.path.clone(),
                column: name,
            })
    }

    fn field<'r>(
        &self,
        line: u64,
        record: &'r StringRecord,
        idx: usize,
        name: &'static str,
        required: bool,
    ) -> Result<&'r str, IngestError> {
        let value = record.get(idx).map(str::trim).unwrap_or("");
        if required && value.is_empty() {
            return Err(IngestError::Field {
                path: self.path.clone(),
                line,
                column: name,
                message: "empty value".into(),
            });
        }
        Ok(value)
    }
}

fn csv_error(path: &str, e: csv::Error) -> IngestError {
    let line = e.position().map_or(0, |p| p.line());
    IngestError::Csv {
        path: path.to_owned(),
        line,
        message: e.to_string(),
    }
}

/// Loads the three CSV files into a [`Dataset`] without filtering anything.
///
/// Kind tags are trimmed and lowercased. The ecosystem name comes from an
/// optional `ecosystem` column of the packages file.
pub fn parse_dataset(paths: &DatasetPaths, cutoff: Timestamp) -> Result<Dataset, IngestError> {
    let ((packages, releases), dependencies) = rayon::join(
        || {
            rayon::join(
                || Table::read(&paths.packages),
                || Table::read(&paths.releases),
            )
        },
        || Table::read(&paths.dependencies),
    );
    let (packages, releases, dependencies) = (packages?, releases?, dependencies?);

    let (ecosystem, packages, package_lines) = load_packages(&packages)?;
    let (releases, release_lines) = load_releases(&releases, &package_lines, cutoff)?;
    let dependencies = load_dependencies(&dependencies, &release_lines)?;
    Ok(Dataset::from_parts_unchecked(
        ecosystem,
        packages,
        releases,
        dependencies,
        cutoff,
        FilterReport::default(),
    ))
}

fn load_packages(
    table: &Table,
) -> Result<(String, Vec<PackageRecord>, HashMap<String, u64>), IngestError> {
    let name_col = table.column("name")?;
    let eco_col = table.columns.get("ecosystem").copied();
    let mut seen: HashMap<String, u64> = HashMap::with_capacity(table.rows.len());
    let mut ecosystem: Option<String> = None;
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let name = table.field(*line, rec, name_col, "name", true)?;
        if let Some(first_line) = seen.get(name) {
            return Err(IngestError::DuplicatePackage {
                path: table.path.clone(),
                name: name.to_owned(),
                first_line: *first_line,
                second_line: *line,
            });
        }
        seen.insert(name.to_owned(), *line);
        if let Some(col) = eco_col {
            let eco = table.field(*line, rec, col, "ecosystem", false)?;
            if !eco.is_empty() && ecosystem.is_none() {
                ecosystem = Some(eco.to_owned());
            }
        }
        out.push(name.to_owned());
    }
    let ecosystem = ecosystem.unwrap_or_else(|| DEFAULT_ECOSYSTEM.to_owned());
    let packages = out
        .into_iter()
        .map(|name| PackageRecord {
            name,
            ecosystem: ecosystem.clone(),
        })
        .collect();
    Ok((ecosystem, packages, seen))
}

fn load_releases(
    table: &Table,
    packages: &HashMap<String, u64>,
    cutoff: Timestamp,
) -> Result<(Vec<ReleaseRecord>, HashMap<(String, String), u64>), IngestError> {
    let pkg_col = table.column("package")?;
    let ver_col = table.column("version")?;
    let ts_col = table.column("timestamp")?;
    let mut seen: HashMap<(String, String), u64> = HashMap::with_capacity(table.rows.len());
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let package = table.field(*line, rec, pkg_col, "package", true)?;
        let version = table.field(*line, rec, ver_col, "version", true)?;
        let raw_ts = table.field(*line, rec, ts_col, "timestamp", true)?;
        let timestamp = parse_timestamp(raw_ts).map_err(|e| IngestError::Field {
            path: table.path.clone(),
            line: *line,
            column: "timestamp",
            message: e.to_string(),
        })?;
        if !packages.contains_key(package) {
            return Err(IngestError::Field {
                path: table.path.clone(),
                line: *line,
                column: "package",
                message: format!("unknown package `{package}`"),
            });
        }
        if timestamp > cutoff {
            return Err(IngestError::Field {
                path: table.path.clone(),
                line: *line,
                column: "timestamp",
                message: format!(
                    "{} is after the observation cutoff {}",
                    format_timestamp(&timestamp),
                    format_timestamp(&cutoff)
                ),
            });
        }
        let key = (package.to_owned(), version.to_owned());
        if let Some(first_line) = seen.get(&key) {
            return Err(IngestError::DuplicateRelease {
                path: table.path.clone(),
                package: key.0,
                version: key.1,
                first_line: *first_line,
                second_line: *line,
            });
        }
        seen.insert(key, *line);
        out.push(ReleaseRecord {
            package: package.to_owned(),
            version: version.to_owned(),
            timestamp,
        });
    }
    Ok((out, seen))
}

fn load_dependencies(
    table: &Table,
    releases: &HashMap<(String, String), u64>,
) -> Result<Vec<DependencyRecord>, IngestError> {
    let src_col = table.column("source_package")?;
    let ver_col = table.column("source_version")?;
    let tgt_col = table.column("target_package")?;
    let con_col = table.column("constraint")?;
    let kind_col = table.column("kind")?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let source_package = table.field(*line, rec, src_col, "source_package", true)?;
        let source_version = table.field(*line, rec, ver_col, "source_version", true)?;
        let target_package = table.field(*line, rec, tgt_col, "target_package", true)?;
        let constraint = table.field(*line, rec, con_col, "constraint", false)?;
        let kind = table.field(*line, rec, kind_col, "kind", false)?;
        if !releases.contains_key(&(source_package.to_owned(), source_version.to_owned())) {
            return Err(IngestError::Field {
                path: table.path.clone(),
                line: *line,
                column: "source_version",
                message: format!("no release {source_package}@{source_version}"),
            });
        }
        out.push(DependencyRecord {
            source_package: source_package.to_owned(),
            source_version: source_version.to_owned(),
            target_package: target_package.to_owned(),
            constraint: constraint.to_owned(),
            kind: kind.to_lowercase(),
        });
    }
    Ok(out)
}

/// Writes the three CSV files of `d` into `dir` using the ingest schema.
pub fn write_csv_files(d: &Dataset, dir: &Path) -> Result<DatasetPaths, IngestError> {
    std::fs::create_dir_all(dir).map_err(|source| IngestError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let paths = DatasetPaths::in_dir(dir);

    // The ecosystem column is optional on input; only write it when it
    // carries information.
    if d.ecosystem() == DEFAULT_ECOSYSTEM {
        write_table(&paths.packages, &["name"], d.packages().iter().map(|p| vec![p.name.clone()]))?;
    } else {
        write_table(
            &paths.packages,
            &["name", "ecosystem"],
            d.packages()
                .iter()
                .map(|p| vec![p.name.clone(), p.ecosystem.clone()]),
        )?;
    }
    write_table(
        &paths.releases,
        &["package", "version", "timestamp"],
        d.releases().iter().map(|r| {
            vec![
                r.package.clone(),
                r.version.clone(),
                format_timestamp(&r.timestamp),
            ]
        }),
    )?;
    write_table(
        &paths.dependencies,
        &[
            "source_package",
            "source_version",
            "target_package",
            "constraint",
            "kind",
        ],
        d.dependencies().iter().map(|x| {
            vec![
                x.source_package.clone(),
                x.source_version.clone(),
                x.target_package.clone(),
                x.constraint.clone(),
                x.kind.clone(),
            ]
        }),
    )?;
    Ok(paths)
}

fn write_table(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), IngestError> {
    let display = path.display().to_string();
    let io_err = |e: csv::Error| IngestError::Csv {
        path: display.clone(),
        line: 0,
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|source| IngestError::Io {
        path: display.clone(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) {
        let mut f = File::create(dir.join(name)).unwrap();
        f.write_all(body.as_bytes()).unwrap();
    }

    fn cutoff() -> Timestamp {
        parse_timestamp("2020-04-01").unwrap()
    }

    fn minimal(dir: &Path) {
        write(dir, PACKAGES_FILE, "name\na\nb\n");
        write(
            dir,
            RELEASES_FILE,
            "package,version,timestamp\na,1.0.0,2020-01-10\nb,1.0.0,2020-01-20\n",
        );
        write(
            dir,
            DEPENDENCIES_FILE,
            "source_package,source_version,target_package,constraint,kind\na,1.0.0,b,^1, Runtime \n",
        );
    }

    #[test]
    fn kinds_are_lowercased_and_trimmed() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        let d = parse_dataset(&DatasetPaths::in_dir(dir.path()), cutoff()).unwrap();
        assert_eq!(d.dependencies()[0].kind, "runtime");
        assert_eq!(d.ecosystem(), DEFAULT_ECOSYSTEM);
        assert_eq!(*d.filter_report(), FilterReport::default());
    }

    #[test]
    fn empty_releases_file_with_header() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), PACKAGES_FILE, "name\na\n");
        write(dir.path(), RELEASES_FILE, "package,version,timestamp\n");
        write(
            dir.path(),
            DEPENDENCIES_FILE,
            "source_package,source_version,target_package,constraint,kind\n",
        );
        let d = parse_dataset(&DatasetPaths::in_dir(dir.path()), cutoff()).unwrap();
        assert!(d.releases().is_empty());
        assert_eq!(d.packages().len(), 1);
    }

    #[test]
    fn malformed_timestamp_names_file_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        write(
            dir.path(),
            RELEASES_FILE,
            "package,version,timestamp\na,1.0.0,2020-01-10\nb,1.0.0,not-a-date\n",
        );
        let err = parse_dataset(&DatasetPaths::in_dir(dir.path()), cutoff()).unwrap_err();
        match &err {
            IngestError::Field { path, line, column, .. } => {
                assert!(path.ends_with(RELEASES_FILE));
                assert_eq!(*line, 3);
                assert_eq!(*column, "timestamp");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("releases.csv:3"));
    }

    #[test]
    fn duplicate_release_lists_both_lines() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        write(
            dir.path(),
            RELEASES_FILE,
            "package,version,timestamp\na,1.0.0,2020-01-10\nb,1.0.0,2020-01-20\na,1.0.0,2020-02-01\n",
        );
        let err = parse_dataset(&DatasetPaths::in_dir(dir.path()), cutoff()).unwrap_err();
        assert!(matches!(
            err,
            IngestError::DuplicateRelease {
                first_line: 2,
                second_line: 4,
                ..
            }
        ));
    }

    #[test]
    fn missing_file_and_missing_column() {
        let dir = tempfile::tempdir().unwrap();
        let err = parse_dataset(&DatasetPaths::in_dir(dir.path()), cutoff()).unwrap_err();
        assert!(matches!(err, IngestError::Io { .. }));

        minimal(dir.path());
        write(dir.path(), PACKAGES_FILE, "label\na\n");
        let err = parse_dataset(&DatasetPaths::in_dir(dir.path()), cutoff()).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn { column: "name", .. }));
    }

    #[test]
    fn ragged_row_is_reported_with_its_line() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        write(dir.path(), PACKAGES_FILE, "name\na\nb,extra\n");
        let err = parse_dataset(&DatasetPaths::in_dir(dir.path()), cutoff()).unwrap_err();
        assert!(matches!(err, IngestError::Csv { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn ecosystem_column_is_picked_up() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        write(dir.path(), PACKAGES_FILE, "name,ecosystem\na,Cargo\nb,Cargo\n");
        let d = parse_dataset(&DatasetPaths::in_dir(dir.path()), cutoff()).unwrap();
        assert_eq!(d.ecosystem(), "Cargo");
        assert!(d.packages().iter().all(|p| p.ecosystem == "Cargo"));
    }
}
