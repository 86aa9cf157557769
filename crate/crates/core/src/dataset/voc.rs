//! Pascal VOC XML annotation parsing.

use std::collections::HashMap;

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::error::{Error, Result};

use super::{Annotation, BoundingBox, DefectClass};

/// Map of the four canonical class names.
pub fn default_label_map() -> HashMap<String, DefectClass> {
    DefectClass::BASE_NAMES
        .iter()
        .enumerate()
        .map(|(i, &n)| (n.to_string(), DefectClass(i)))
        .collect()
}

fn line_of(xml: &str, byte_offset: usize) -> usize {
    let end = byte_offset.min(xml.len());
    xml.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
}

#[derive(Default)]
struct PendingObject {
    name: Option<String>,
    xmin: Option<i64>,
    ymin: Option<i64>,
    xmax: Option<i64>,
    ymax: Option<i64>,
}

/// Parse one VOC annotation document into a list of [`Annotation`]s.
///
/// Only the elements the pipeline needs are interpreted: `<filename>` (the
/// image id) and, per `<object>`, `<name>` and the `<bndbox>` coordinates.
/// Unknown elements are ignored. Coordinates must be integers. A `<name>`
/// absent from `label_map` is an error naming the offender.
pub fn parse_voc_xml(
    xml: &str,
    label_map: &HashMap<String, DefectClass>,
) -> Result<Vec<Annotation>> {
    let mut reader = Reader::from_str(xml);
    let config = reader.config_mut();
    config.trim_text(true);

    let parse_err = |reader: &Reader<&[u8]>, message: String| Error::Parse {
        line: line_of(xml, reader.buffer_position() as usize),
        message,
    };

    let mut stack: Vec<String> = Vec::new();
    let mut image_id = String::new();
    let mut current: Option<PendingObject> = None;
    let mut objects: Vec<PendingObject> = Vec::new();

    loop {
        match reader.read_event() {
            Err(e) => {
                return Err(Error::Parse {
                    line: line_of(xml, reader.buffer_position() as usize),
                    message: e.to_string(),
                })
            }
            Ok(Event::Eof) => break,
            Ok(Event::Start(e)) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                if name == "object" && stack.last().map(String::as_str) == Some("annotation") {
                    if current.is_some() {
                        return Err(parse_err(&reader, "nested <object> elements".into()));
                    }
                    current = Some(PendingObject::default());
                }
                stack.push(name);
            }
            Ok(Event::End(_)) => {
                let closed = stack.pop();
                if closed.as_deref() == Some("object") {
                    match current.take() {
                        Some(obj) => objects.push(obj),
                        None => return Err(parse_err(&reader, "unmatched </object>".into())),
                    }
                }
            }
            Ok(Event::Text(t)) => {
                let text = t
                    .xml_content()
                    .map_err(|e| parse_err(&reader, e.to_string()))?
                    .trim()
                    .to_string();
                if text.is_empty() {
                    continue;
                }
                let elem = stack.last().map(String::as_str).unwrap_or("");
                let parent = stack.len().checked_sub(2).map(|i| stack[i].as_str()).unwrap_or("");
                match (parent, elem) {
                    ("annotation", "filename") => image_id = text,
                    ("object", "name") => {
                        if let Some(obj) = current.as_mut() {
                            obj.name = Some(text);
                        }
                    }
                    ("bndbox", coord @ ("xmin" | "ymin" | "xmax" | "ymax")) => {
                        if let Some(obj) = current.as_mut() {
                            let value: i64 = text.parse().map_err(|_| {
                                parse_err(&reader, format!("{coord} is not an integer: {text:?}"))
                            })?;
                            match coord {
                                "xmin" => obj.xmin = Some(value),
                                "ymin" => obj.ymin = Some(value),
                                "xmax" => obj.xmax = Some(value),
                                _ => obj.ymax = Some(value),
                            }
                        }
                    }
                    _ => {}
                }
            }
            Ok(_) => {}
        }
    }

    if !stack.is_empty() {
        return Err(Error::Parse {
            line: line_of(xml, xml.len()),
            message: format!("unclosed element <{}>", stack.last().unwrap()),
        });
    }

    let mut annotations = Vec::with_capacity(objects.len());
    for (i, obj) in objects.into_iter().enumerate() {
        let name = obj
            .name
            .ok_or_else(|| Error::Parse { line: 1, message: format!("object {i} has no <name>") })?;
        let label = *label_map.get(&name).ok_or(Error::UnknownLabel(name))?;
        let coord = |v: Option<i64>, which: &str| {
            v.ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("object {i} is missing <{which}>"),
            })
        };
        annotations.push(Annotation {
            image_id: image_id.clone(),
            bbox: BoundingBox {
                xmin: coord(obj.xmin, "xmin")?,
                ymin: coord(obj.ymin, "ymin")?,
                xmax: coord(obj.xmax, "xmax")?,
                ymax: coord(obj.ymax, "ymax")?,
            },
            label,
        });
    }
    Ok(annotations)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_OBJECT: &str = r#"<?xml version="1.0"?>
<annotation>
    <folder>images</folder>
    <filename>sample_01.pgm</filename>
    <size><width>128</width><height>96</height><depth>1</depth></size>
    <object>
        <name>crack</name>
        <pose>Unspecified</pose>
        <bndbox>
            <xmin>10</xmin>
            <ymin>20</ymin>
            <xmax>60</xmax>
            <ymax>90</ymax>
        </bndbox>
    </object>
</annotation>
"#;

    #[test]
    fn parses_a_single_object() {
        let anns = parse_voc_xml(ONE_OBJECT, &default_label_map()).unwrap();
        assert_eq!(anns.len(), 1);
        assert_eq!(anns[0].image_id, "sample_01.pgm");
        assert_eq!(anns[0].label, DefectClass::CRACK);
        assert_eq!(anns[0].bbox, BoundingBox { xmin: 10, ymin: 20, xmax: 60, ymax: 90 });
    }

    #[test]
    fn no_objects_yields_empty_list() {
        let xml = "<annotation><filename>x.pgm</filename></annotation>";
        let anns = parse_voc_xml(xml, &default_label_map()).unwrap();
        assert!(anns.is_empty());
    }

    #[test]
    fn multiple_objects_in_document_order() {
        let xml = r#"<annotation><filename>f</filename>
            <object><name>hole</name>
              <bndbox><xmin>1</xmin><ymin>2</ymin><xmax>3</xmax><ymax>4</ymax></bndbox></object>
            <object><name>spatter</name>
              <bndbox><xmin>5</xmin><ymin>6</ymin><xmax>7</xmax><ymax>8</ymax></bndbox></object>
        </annotation>"#;
        let anns = parse_voc_xml(xml, &default_label_map()).unwrap();
        assert_eq!(anns.len(), 2);
        assert_eq!(anns[0].label, DefectClass::HOLE);
        assert_eq!(anns[1].label, DefectClass::SPATTER);
    }

    #[test]
    fn unknown_class_name_is_rejected_by_name() {
        let xml = ONE_OBJECT.replace("crack", "scratch");
        match parse_voc_xml(&xml, &default_label_map()) {
            Err(Error::UnknownLabel(name)) => assert_eq!(name, "scratch"),
            other => panic!("expected UnknownLabel, got {other:?}"),
        }
    }

    #[test]
    fn malformed_xml_reports_a_line() {
        let xml = "<annotation>\n  <object>\n    <name>crack</name>\n  </annotation>";
        match parse_voc_xml(xml, &default_label_map()) {
            Err(Error::Parse { line, .. }) => assert!(line >= 3, "line {line}"),
            other => panic!("expected Parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_integer_coordinate_is_rejected() {
        let xml = ONE_OBJECT.replace("<xmin>10</xmin>", "<xmin>10.5</xmin>");
        assert!(matches!(parse_voc_xml(&xml, &default_label_map()), Err(Error::Parse { .. })));
    }
}
