"""Writes the synthetic toy dataset under data/toy/.

The stories, chunks and screens describe an invented library app. Screens
are drawn with Pillow and carry Title/Description tEXt chunks so the offline
backend can embed and render them.

    python tools/make_toy_dataset.py [out_dir]
"""

import json
import sys
from pathlib import Path

from PIL import Image, ImageDraw, PngImagePlugin

STORIES = [
    {
        "id": "S1",
        "title": "Borrow a book",
        "narrative": "As a library member, I want to borrow an available book online, so that I can pick it up at the front desk.",
        "extensions": [
            "A book that is already on loan shows the date it becomes available.",
            "Members with overdue items cannot borrow new books.",
        ],
    },
    {
        "id": "S2",
        "title": "Renew a loan",
        "narrative": "As a library member, I want to renew a loan before it is due, so that I can keep reading without paying a fine.",
        "extensions": [
            "A book reserved by another member cannot be renewed.",
            "A loan can be renewed at most two times.",
        ],
    },
    {
        "id": "S3",
        "title": "Search the catalog",
        "narrative": "As a visitor, I want to search the catalog by title or author, so that I can find books quickly.",
        "extensions": ["A search without results suggests similar titles."],
    },
    {
        "id": "S4",
        "title": "Pay overdue fines",
        "narrative": "As a library member, I want to pay overdue fines by card, so that my account is unblocked.",
        "extensions": [
            "A failed payment leaves the account blocked.",
            "A receipt is emailed after a successful payment.",
        ],
    },
    {
        "id": "S5",
        "title": "Reserve a study room",
        "narrative": "As a student, I want to reserve a study room for a time slot, so that I have a quiet place to work.",
        "extensions": [
            "Overlapping reservations for the same room are rejected.",
            "A reservation can be cancelled up to one hour before the slot starts.",
        ],
    },
]

CHUNKS = [
    ("c01", "background", "Members may hold up to five books on loan at the same time. Each loan lasts three weeks."),
    ("c02", "consideration", "Borrowing is blocked while a member has overdue books or unpaid fines above five euros."),
    ("c03", "background", "Books borrowed online are kept at the front desk for three days before they return to the shelf."),
    ("c04", "consideration", "A loan can be renewed twice, and only if no other member has reserved the book."),
    ("c05", "background", "Overdue books cost twenty cents per day, capped at ten euros per book."),
    ("c06", "background", "The catalog indexes title, author, subject and ISBN for every book and journal."),
    ("c07", "consideration", "Catalog search must answer within one second and tolerate small spelling mistakes."),
    ("c08", "background", "Fines are paid by debit or credit card through the external payment provider."),
    ("c09", "consideration", "Payment card data never touches library servers; only a payment token is stored."),
    ("c10", "background", "Study rooms seat up to six students and can be booked in one hour slots between 8:00 and 22:00."),
    ("c11", "consideration", "A student may hold at most two room reservations per day."),
    ("c12", "background", "The library newsletter is sent on the first Monday of every month."),
]

SCREENS = [
    ("v-catalog", "Catalog search", "Search box for title or author\nResult list with cover, title, author and availability\nFilter by subject and year"),
    ("v-book", "Book details", "Cover, title and author of the book\nAvailability and due date of current loan\nBorrow button and reserve button"),
    ("v-account", "My account", "Current loans with due dates and renew buttons\nOutstanding fines with pay by card button\nAccount status blocked or active"),
    ("v-rooms", "Study rooms", "Calendar of rooms by hour\nFree slots shown in green\nReserve and cancel buttons"),
]

CAPTIONS = {
    "v-catalog": "catalog search page",
    "v-book": "book detail page",
    "v-account": "account overview",
    "v-rooms": "room booking calendar",
}

RELEVANCE = {
    "S1": ["c01", "c02", "c03", "v-book", "v-catalog"],
    "S2": ["c04", "c05", "v-account"],
    "S3": ["c06", "c07", "v-catalog"],
    "S4": ["c05", "c08", "c09", "v-account"],
    "S5": ["c10", "c11", "v-rooms"],
}

OBJECTIVES = {
    "S1": [
        ("S1-O1", "An available book can be borrowed online and is held at the front desk."),
        ("S1-O2", "A book already on loan shows when it becomes available."),
        ("S1-O3", "Members with overdue books are blocked from borrowing."),
    ],
    "S2": [
        ("S2-O1", "A loan is renewed before its due date."),
        ("S2-O2", "A reserved book cannot be renewed."),
    ],
    "S3": [
        ("S3-O1", "Searching by title or author lists matching books."),
        ("S3-O2", "A search without results suggests similar titles."),
    ],
    "S4": [
        ("S4-O1", "Paying overdue fines by card unblocks the account."),
        ("S4-O2", "A failed payment leaves the account blocked."),
        ("S4-O3", "A receipt is emailed after payment."),
    ],
    "S5": [
        ("S5-O1", "A free study room slot can be reserved."),
        ("S5-O2", "Overlapping reservations are rejected."),
    ],
}

GROUND_TRUTH = {
    "S1": [
        "GIVEN a signed-in library member\nAND the book is available\nWHEN the member borrows the book online\nTHEN the book is held at the front desk for three days",
        "GIVEN a book that is on loan\nWHEN a member opens the book details\nTHEN the date the book becomes available is shown",
        "GIVEN a member with an overdue book\nWHEN the member tries to borrow a book\nTHEN borrowing is refused with a message about the overdue book",
    ],
    "S2": [
        "GIVEN a member with a loan that is not yet due\nWHEN the member renews the loan\nTHEN the due date moves three weeks later",
        "GIVEN a loan whose book is reserved by another member\nWHEN the member tries to renew the loan\nTHEN the renewal is refused",
    ],
    "S3": [
        "GIVEN a visitor on the catalog page\nWHEN the visitor searches for an author\nTHEN books by that author are listed",
        "GIVEN a visitor on the catalog page\nWHEN the visitor searches for a title with no match\nTHEN similar titles are suggested",
    ],
    "S4": [
        "GIVEN a blocked member with overdue fines\nWHEN the member pays the fines by card\nTHEN the account is unblocked\nAND a receipt is emailed",
        "GIVEN a blocked member with overdue fines\nWHEN the card payment fails\nTHEN the account stays blocked",
    ],
    "S5": [
        "GIVEN a student viewing the room calendar\nWHEN the student reserves a free slot\nTHEN the slot is shown as reserved",
        "GIVEN a room reserved from 10:00 to 11:00\nWHEN another student reserves the same room at 10:00\nTHEN the reservation is rejected",
    ],
}


def draw_screen(path: Path, title: str, description: str) -> None:
    img = Image.new("RGB", (320, 200), (250, 250, 250))
    d = ImageDraw.Draw(img)
    d.rectangle([0, 0, 319, 28], fill=(40, 70, 120))
    d.text((8, 8), title, fill=(255, 255, 255))
    y = 40
    for line in description.splitlines():
        d.rectangle([8, y, 311, y + 36], outline=(180, 180, 180))
        d.text((14, y + 12), line[:48], fill=(30, 30, 30))
        y += 46
    info = PngImagePlugin.PngInfo()
    info.add_text("Title", title)
    info.add_text("Description", description)
    img.save(path, "PNG", pnginfo=info)


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "toy"
    (out / "images").mkdir(parents=True, exist_ok=True)
    visuals = []
    for vid, title, desc in SCREENS:
        draw_screen(out / "images" / f"{vid}.png", title, desc)
        visuals.append({"id": vid, "image": f"images/{vid}.png", "media_type": "image/png", "caption": CAPTIONS[vid]})
    doc = {
        "version": "1",
        "note": "Synthetic data for offline tests. Not taken from any real project.",
        "stories": STORIES,
        "chunks": [{"id": i, "kind": k, "text": t} for i, k, t in CHUNKS],
        "visuals": visuals,
        "ground_truth": GROUND_TRUTH,
        "objectives": {s: [{"id": i, "text": t} for i, t in objs] for s, objs in OBJECTIVES.items()},
        "relevance": RELEVANCE,
    }
    (out / "dataset.json").write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
