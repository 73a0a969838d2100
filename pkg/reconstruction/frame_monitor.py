"""
Режим --follow: спостереження за index.jsonl журналу кадрів, що ще дописується,
та інкрементальна інтеграція нових кадрів сонара.
"""
import logging
import threading
from pathlib import Path

from django.conf import settings
from watchdog.events import FileSystemEventHandler
from watchdog.observers import Observer

from reconstruction.utils.frame_log import INDEX_NAME

logger = logging.getLogger(__name__)

FOLLOW_POLL_SECONDS = getattr(settings, "FOLLOW_POLL_SECONDS", 1.0)


class IndexFileHandler(FileSystemEventHandler):
    """Обробник подій файлової системи для index.jsonl"""

    def __init__(self, index_name=INDEX_NAME):
        super().__init__()
        self.index_name = index_name
        self.changed = threading.Event()

    def _touch(self, event):
        if event.is_directory:
            return
        if Path(event.src_path).name == self.index_name:
            self.changed.set()

    def on_modified(self, event):
        """Викликається при зміні файлу"""
        self._touch(event)

    def on_created(self, event):
        self._touch(event)


class FrameLogFollower:
    """
    Слідкує за журналом і передає нові записи в сесію реконструкції.
    Опитування з періодом FOLLOW_POLL_SECONDS страхує від пропущених подій watchdog.
    """

    def __init__(self, log, session, on_batch=None, poll_seconds=FOLLOW_POLL_SECONDS):
        self.log = log
        self.session = session
        self.on_batch = on_batch
        self.poll_seconds = poll_seconds
        self.handler = IndexFileHandler()
        self.observer = None
        self.stop_event = threading.Event()
        self.offset = 0
        self.next_index = 0
        self.last_timestamp = None

    def poll(self):
        """Обробляє всі нові повні записи; повертає їх кількість"""
        records, self.offset = self.log.read_from(self.offset, self.next_index, self.last_timestamp)
        if not records:
            return 0
        self.next_index = records[-1].index + 1
        self.last_timestamp = records[-1].timestamp
        self.session.process_records(self.log, records, queue_size=0)
        logger.info(
            f"Оброблено {len(records)} нових записів (всього інтегровано {self.session.report.processed})"
        )
        if self.on_batch:
            self.on_batch(self.session)
        return len(records)

    def start(self):
        self.observer = Observer()
        self.observer.schedule(self.handler, str(self.log.directory), recursive=False)
        self.observer.start()
        logger.info(f"Моніторинг журналу {self.log.index_path} запущено")

    def stop(self):
        self.stop_event.set()
        if self.observer:
            self.observer.stop()
            self.observer.join()
            self.observer = None
        logger.info("Моніторинг журналу зупинено")

    def run(self, max_idle_polls=None):
        """
        Основний цикл. max_idle_polls - зупинитися після стількох порожніх опитувань поспіль
        (None - працювати до stop()).
        """
        self.start()
        idle = 0
        try:
            self.poll()
            while not self.stop_event.is_set():
                self.handler.changed.wait(self.poll_seconds)
                self.handler.changed.clear()
                if self.poll():
                    idle = 0
                    continue
                idle += 1
                if max_idle_polls is not None and idle >= max_idle_polls:
                    break
        finally:
            self.stop()
        return self.session.result()
