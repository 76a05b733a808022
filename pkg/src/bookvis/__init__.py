"""BookVIS: snap a book cover, recognize it, and get glanceable visual answers.

The library is organized around the browsing loop:

- ``catalog``     book/author/genre metadata and the metadata-client hook
- ``features``    image decoding and local invariant descriptors
- ``vocab_index`` hierarchical visual vocabulary, inverted file, ranked matching
- ``palette``     dominant cover colors and the derived UI theme
- ``taste``       genre histograms, radial layouts, density fields, placement math
- ``vizgen``      deterministic SVG + JSON renderings of the six views
- ``store``       file-backed user shelves and ratings
- ``service``     the HTTP API tying everything together
- ``cli``         operator tooling (index builds, queries, imports, serving)
"""

__version__ = "0.1.0"
